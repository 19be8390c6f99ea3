import type {
  ExtractResponse,
  MapDocument,
  PanelParams,
  Selection,
} from "./types.js";
import { layoutDocument, type Layout } from "./layout.js";

/** Panel bounds mirroring the ranges the server enforces. */
export const PARAM_BOUNDS = {
  k: { min: 2, max: 50, step: 1 },
  mincover: { min: 0, max: 1, step: 0.05 },
  minscore: { min: 0, max: 1, step: 0.05 },
  tau: { min: 0.05, max: 1, step: 0.05 },
  seed: { min: 0, max: 1_000_000, step: 1 },
} as const;

export const DEFAULT_PARAMS: PanelParams = {
  k: 8,
  mincover: 0.5,
  minscore: 0.85,
  tau: 0.5,
  seed: 0,
};

/** Clamp a single panel value into its server-valid range. */
export function clampParam(field: keyof PanelParams, value: number): number {
  const bounds = PARAM_BOUNDS[field];
  if (Number.isNaN(value)) return DEFAULT_PARAMS[field];
  let v = Math.min(bounds.max, Math.max(bounds.min, value));
  if (bounds.step === 1) v = Math.round(v);
  return v;
}

export function clampParams(params: PanelParams): PanelParams {
  return {
    k: clampParam("k", params.k),
    mincover: clampParam("mincover", params.mincover),
    minscore: clampParam("minscore", params.minscore),
    tau: clampParam("tau", params.tau),
    seed: clampParam("seed", params.seed),
  };
}

/** Node/edge count movement between the last two successful maps. */
export interface MapDiff {
  nodeDelta: number;
  edgeDelta: number;
  unchanged: boolean;
}

export type Phase = "idle" | "loading" | "error";

export interface StateSnapshot {
  corpusId: string | null;
  params: PanelParams;
  document: MapDocument | null;
  mapId: string | null;
  layout: Layout | null;
  phase: Phase;
  /** The displayed document predates the in-flight or failed request. */
  stale: boolean;
  errorMessage: string | null;
  guidance: string | null;
  retryable: boolean;
  diff: MapDiff | null;
  selection: Selection | null;
}

type Listener = (state: StateSnapshot) => void;

/**
 * Single source of truth for the view.  The displayed document is always
 * the last successful response; requests in flight or failures only mark
 * it stale, never blank it.
 */
export class ViewState {
  private corpusId: string | null = null;
  private params: PanelParams = { ...DEFAULT_PARAMS };
  private document: MapDocument | null = null;
  private mapId: string | null = null;
  private phase: Phase = "idle";
  private errorMessage: string | null = null;
  private guidance: string | null = null;
  private retryable = false;
  private diff: MapDiff | null = null;
  private selection: Selection | null = null;
  private layouts = new Map<string, Layout>();
  private listeners: Listener[] = [];

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  snapshot(): StateSnapshot {
    return {
      corpusId: this.corpusId,
      params: { ...this.params },
      document: this.document,
      mapId: this.mapId,
      layout: this.mapId ? (this.layouts.get(this.mapId) ?? null) : null,
      phase: this.phase,
      stale: this.document !== null && this.phase !== "idle",
      errorMessage: this.errorMessage,
      guidance: this.guidance,
      retryable: this.retryable,
      diff: this.diff,
      selection: this.selection,
    };
  }

  private notify(): void {
    const snap = this.snapshot();
    for (const listener of this.listeners) listener(snap);
  }

  setCorpus(corpusId: string): void {
    if (corpusId === this.corpusId) return;
    this.corpusId = corpusId;
    this.selection = null;
    this.diff = null;
    this.notify();
  }

  getParams(): PanelParams {
    return { ...this.params };
  }

  setParam(field: keyof PanelParams, value: number): void {
    const next = clampParam(field, value);
    if (next === this.params[field]) {
      this.notify(); // re-render so an out-of-range input snaps back
      return;
    }
    this.params = { ...this.params, [field]: next };
    this.notify();
  }

  markLoading(): void {
    this.phase = "loading";
    this.errorMessage = null;
    this.guidance = null;
    this.retryable = false;
    this.notify();
  }

  applyResponse(response: ExtractResponse): void {
    const previous = this.document;
    const unchanged = this.mapId === response.map_id;
    this.diff = previous
      ? {
          nodeDelta: response.map.nodes.length - previous.nodes.length,
          edgeDelta: response.map.edges.length - previous.edges.length,
          unchanged,
        }
      : null;
    this.document = response.map;
    this.mapId = response.map_id;
    if (!this.layouts.has(response.map_id)) {
      this.layouts.set(response.map_id, layoutDocument(response.map));
    }
    this.phase = "idle";
    this.errorMessage = null;
    this.guidance = null;
    this.retryable = false;
    if (!this.selectionStillValid()) this.selection = null;
    this.notify();
  }

  markError(message: string, opts?: { guidance?: string; retryable?: boolean }): void {
    this.phase = "error";
    this.errorMessage = message;
    this.guidance = opts?.guidance ?? null;
    this.retryable = opts?.retryable ?? false;
    this.notify();
  }

  select(selection: Selection | null): void {
    this.selection = selection;
    this.notify();
  }

  private selectionStillValid(): boolean {
    const sel = this.selection;
    const doc = this.document;
    if (!sel || !doc) return sel === null;
    switch (sel.kind) {
      case "node":
        return doc.nodes.some((n) => n.id === sel.id);
      case "edge":
        return doc.edges.some(
          (e) => e.source === sel.source && e.target === sel.target,
        );
      case "storyline":
        return doc.storylines.some((s) => s.id === sel.id);
    }
  }
}
