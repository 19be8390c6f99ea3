import { ApiClient, ApiError } from "./api.js";
import { Debouncer } from "./debounce.js";
import { ViewState, type StateSnapshot } from "./state.js";
import {
  buildAppShell,
  renderBanner,
  renderDetail,
  renderMap,
  renderStatus,
  type AppRefs,
} from "./render.js";
import type { CorpusInfo, PanelParams } from "./types.js";

export interface ExplorerOptions {
  /** Delay between a panel change and the extraction it triggers. */
  debounceMs?: number;
}

function isAbort(err: unknown): boolean {
  return err instanceof Error && err.name === "AbortError";
}

function guidanceFor(constraintClass?: string): string {
  switch (constraintClass) {
    case "acceptance":
      return "Lower minscore to relax the acceptance requirement.";
    case "coverage":
      return "Lower mincover to relax the coverage requirement.";
    case "structure":
      return "Lower K or widen the time window.";
    default:
      return "Lower minscore or mincover.";
  }
}

/**
 * Glue between the panel, the extraction service, and the map view.
 * Panel changes are debounced into a single in-flight request; newer
 * changes abort older pending requests, and the last successful map
 * stays on screen (flagged stale) until a replacement arrives.
 */
export class MapExplorer {
  readonly state = new ViewState();
  readonly refs: AppRefs;
  private readonly debouncer: Debouncer;
  private inflight: AbortController | null = null;
  private requestSeq = 0;

  constructor(
    root: HTMLElement,
    private readonly api: ApiClient,
    options: ExplorerOptions = {},
  ) {
    this.refs = buildAppShell(root);
    this.debouncer = new Debouncer(options.debounceMs ?? 400);

    for (const [field, input] of Object.entries(this.refs.paramInputs)) {
      input.addEventListener("change", () => {
        this.onParamChange(field as keyof PanelParams, Number(input.value));
      });
    }
    this.refs.corpusSelect.addEventListener("change", () => {
      this.state.setCorpus(this.refs.corpusSelect.value);
      void this.extractNow();
    });
    this.refs.retryButton.addEventListener("click", () => {
      void (this.state.snapshot().corpusId ? this.extractNow() : this.init());
    });

    this.state.subscribe((snap) => this.renderAll(snap));
    this.renderAll(this.state.snapshot());
  }

  /** Load the corpus list and extract the first usable corpus. */
  async init(): Promise<void> {
    let corpora: CorpusInfo[];
    try {
      corpora = await this.api.listCorpora();
    } catch (err) {
      const reason = err instanceof Error ? err.message : String(err);
      this.state.markError(`service unreachable: ${reason}`, {
        retryable: true,
      });
      return;
    }
    this.populateCorpora(corpora);
    const usable = corpora.find((c) => c.has_embeddings);
    if (!usable) {
      this.state.markError(
        "no corpus with embeddings available — ingest one first",
      );
      return;
    }
    this.refs.corpusSelect.value = usable.id;
    this.state.setCorpus(usable.id);
    await this.extractNow();
  }

  private populateCorpora(corpora: CorpusInfo[]): void {
    this.refs.corpusSelect.replaceChildren();
    for (const corpus of corpora) {
      const option = document.createElement("option");
      const communities = corpus.communities
        .map((c) => `${c.community} (${c.count})`)
        .join(", ");
      option.value = corpus.id;
      option.textContent = `${corpus.id} — ${communities}`;
      option.disabled = !corpus.has_embeddings;
      this.refs.corpusSelect.appendChild(option);
    }
  }

  onParamChange(field: keyof PanelParams, value: number): void {
    this.state.setParam(field, value);
    this.debouncer.schedule(() => void this.extractNow());
  }

  /** Issue the extraction immediately, superseding any pending request. */
  async extractNow(): Promise<void> {
    const snap = this.state.snapshot();
    if (!snap.corpusId) return;

    this.debouncer.cancel();
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    const seq = ++this.requestSeq;
    this.state.markLoading();

    try {
      const response = await this.api.extract(
        snap.corpusId,
        snap.params,
        controller.signal,
      );
      if (seq !== this.requestSeq) return;
      this.state.applyResponse(response);
    } catch (err) {
      if (isAbort(err) || controller.signal.aborted) return;
      if (seq !== this.requestSeq) return;
      if (err instanceof ApiError) {
        this.state.markError(err.detail, {
          guidance: err.isInfeasible
            ? guidanceFor(err.constraintClass)
            : undefined,
          retryable: err.status >= 500,
        });
      } else {
        const reason = err instanceof Error ? err.message : String(err);
        this.state.markError(`service unreachable: ${reason}`, {
          retryable: true,
        });
      }
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
  }

  private renderAll(snap: StateSnapshot): void {
    for (const [field, input] of Object.entries(this.refs.paramInputs)) {
      const value = String(snap.params[field as keyof PanelParams]);
      if (input.value !== value) input.value = value;
    }
    renderStatus(this.refs, snap);
    renderBanner(this.refs, snap);
    renderMap(this.refs.mapHost, snap.document, snap.layout, snap.selection, (sel) =>
      this.state.select(sel),
    );
    renderDetail(this.refs.detailPanel, snap.document, snap.selection);
  }
}
