import type { MapDocument, PanelParams, Selection } from "./types.js";
import { SUPPORTED_SCHEMA_VERSION } from "./types.js";
import { PARAM_BOUNDS } from "./state.js";
import type { StateSnapshot } from "./state.js";
import { COLUMN_WIDTH, MARGIN_X, type Layout } from "./layout.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const NODE_RADIUS = 14;
const TITLE_LIMIT = 34;

export interface AppRefs {
  corpusSelect: HTMLSelectElement;
  paramInputs: Record<keyof PanelParams, HTMLInputElement>;
  diffBadge: HTMLElement;
  staleFlag: HTMLElement;
  banner: HTMLElement;
  bannerMessage: HTMLElement;
  bannerGuidance: HTMLElement;
  retryButton: HTMLButtonElement;
  mapHost: HTMLElement;
  detailPanel: HTMLElement;
}

const PARAM_LABELS: Record<keyof PanelParams, string> = {
  k: "K (main story length)",
  mincover: "Min topic coverage",
  minscore: "Min acceptance",
  tau: "Edge threshold τ",
  seed: "Clustering seed",
};

/** Build the static page skeleton once; later renders only fill it in. */
export function buildAppShell(root: HTMLElement): AppRefs {
  root.replaceChildren();

  const header = document.createElement("header");
  const title = document.createElement("h1");
  title.textContent = "Narrative Atlas";
  header.appendChild(title);

  const panel = document.createElement("aside");
  panel.className = "param-panel";

  const corpusLabel = document.createElement("label");
  corpusLabel.textContent = "Corpus";
  const corpusSelect = document.createElement("select");
  corpusSelect.className = "corpus-select";
  corpusLabel.appendChild(corpusSelect);
  panel.appendChild(corpusLabel);

  const paramInputs = {} as Record<keyof PanelParams, HTMLInputElement>;
  for (const field of Object.keys(PARAM_LABELS) as (keyof PanelParams)[]) {
    const bounds = PARAM_BOUNDS[field];
    const label = document.createElement("label");
    label.textContent = PARAM_LABELS[field];
    const input = document.createElement("input");
    input.type = "number";
    input.min = String(bounds.min);
    input.max = String(bounds.max);
    input.step = String(bounds.step);
    input.dataset.param = field;
    label.appendChild(input);
    panel.appendChild(label);
    paramInputs[field] = input;
  }

  const status = document.createElement("div");
  status.className = "status";
  const diffBadge = document.createElement("span");
  diffBadge.className = "diff-badge";
  const staleFlag = document.createElement("span");
  staleFlag.className = "stale-flag";
  staleFlag.hidden = true;
  status.append(diffBadge, staleFlag);

  const banner = document.createElement("div");
  banner.className = "banner";
  banner.hidden = true;
  const bannerMessage = document.createElement("span");
  bannerMessage.className = "banner-message";
  const bannerGuidance = document.createElement("span");
  bannerGuidance.className = "banner-guidance";
  const retryButton = document.createElement("button");
  retryButton.className = "retry";
  retryButton.textContent = "Retry";
  retryButton.hidden = true;
  banner.append(bannerMessage, bannerGuidance, retryButton);

  const mapHost = document.createElement("main");
  mapHost.className = "map-host";

  const detailPanel = document.createElement("aside");
  detailPanel.className = "detail-panel";
  detailPanel.hidden = true;

  root.append(header, panel, status, banner, mapHost, detailPanel);
  return {
    corpusSelect,
    paramInputs,
    diffBadge,
    staleFlag,
    banner,
    bannerMessage,
    bannerGuidance,
    retryButton,
    mapHost,
    detailPanel,
  };
}

function signed(n: number): string {
  return n > 0 ? `+${n}` : String(n);
}

export function renderStatus(refs: AppRefs, snap: StateSnapshot): void {
  if (!snap.diff) {
    refs.diffBadge.textContent = "";
  } else if (snap.diff.unchanged) {
    refs.diffBadge.textContent = "no change";
  } else {
    refs.diffBadge.textContent = `nodes ${signed(snap.diff.nodeDelta)} · edges ${signed(snap.diff.edgeDelta)}`;
  }
  refs.staleFlag.hidden = !snap.stale;
  refs.staleFlag.textContent =
    snap.phase === "loading" ? "re-solving…" : "showing previous map";
}

export function renderBanner(refs: AppRefs, snap: StateSnapshot): void {
  if (snap.phase !== "error") {
    refs.banner.hidden = true;
    return;
  }
  refs.banner.hidden = false;
  refs.bannerMessage.textContent = snap.errorMessage ?? "request failed";
  refs.bannerGuidance.textContent = snap.guidance ?? "";
  refs.retryButton.hidden = !snap.retryable;
}

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
): SVGElementTagNameMap[K] {
  return document.createElementNS(SVG_NS, tag);
}

function truncate(text: string): string {
  return text.length <= TITLE_LIMIT ? text : `${text.slice(0, TITLE_LIMIT - 1)}…`;
}

function metricsLabel(upvoteRatio: number, percentile: number): string {
  return `↑${(upvoteRatio * 100).toFixed(0)}% · p${(percentile * 100).toFixed(0)}`;
}

function sameEdge(sel: Selection | null, source: string, target: string): boolean {
  return (
    sel?.kind === "edge" && sel.source === source && sel.target === target
  );
}

/**
 * Draw the map into `host`: storylines as columns, time running downward
 * from the newest event, the main route dashed, landmarks starred.
 */
export function renderMap(
  host: HTMLElement,
  doc: MapDocument | null,
  layout: Layout | null,
  selection: Selection | null,
  onSelect: (selection: Selection) => void,
): void {
  host.replaceChildren();

  if (!doc) {
    const empty = document.createElement("div");
    empty.className = "empty-state";
    empty.textContent =
      "No map yet — choose a corpus and tune the panel to extract one.";
    host.appendChild(empty);
    return;
  }

  if (doc.schema_version !== SUPPORTED_SCHEMA_VERSION) {
    const error = document.createElement("div");
    error.className = "schema-error";
    error.textContent =
      `Unsupported map schema_version ${doc.schema_version}; ` +
      `this explorer understands version ${SUPPORTED_SCHEMA_VERSION}.`;
    host.appendChild(error);
    return;
  }

  const lay = layout;
  if (!lay) return;

  const svg = svgEl("svg");
  svg.setAttribute("viewBox", `0 0 ${lay.width} ${lay.height + 24}`);
  svg.setAttribute("width", String(lay.width));
  svg.setAttribute("height", String(lay.height + 24));

  const headers = svgEl("g");
  headers.setAttribute("class", "column-headers");
  doc.storylines.forEach((line, index) => {
    const x = MARGIN_X + index * COLUMN_WIDTH;
    const label = svgEl("text");
    label.setAttribute("class", "column-header");
    label.setAttribute("x", String(x));
    label.setAttribute("y", "18");
    label.setAttribute("text-anchor", "middle");
    label.textContent = `storyline ${line.id}`;
    label.addEventListener("click", () =>
      onSelect({ kind: "storyline", id: line.id }),
    );
    headers.appendChild(label);
  });
  svg.appendChild(headers);

  const edgeLayer = svgEl("g");
  edgeLayer.setAttribute("class", "edges");
  for (const edge of doc.edges) {
    const from = lay.positions.get(edge.source);
    const to = lay.positions.get(edge.target);
    if (!from || !to) continue;
    const line = svgEl("line");
    line.setAttribute("x1", String(from.x));
    line.setAttribute("y1", String(from.y + 24));
    line.setAttribute("x2", String(to.x));
    line.setAttribute("y2", String(to.y + 24));
    const classes = ["edge"];
    if (edge.main_route) {
      classes.push("main-route");
      line.setAttribute("stroke-dasharray", "8 4");
    }
    if (sameEdge(selection, edge.source, edge.target)) classes.push("selected");
    line.setAttribute("class", classes.join(" "));
    line.dataset.source = edge.source;
    line.dataset.target = edge.target;
    line.addEventListener("click", () =>
      onSelect({ kind: "edge", source: edge.source, target: edge.target }),
    );
    edgeLayer.appendChild(line);
  }
  svg.appendChild(edgeLayer);

  const nodeLayer = svgEl("g");
  nodeLayer.setAttribute("class", "nodes");
  for (const node of doc.nodes) {
    const pos = lay.positions.get(node.id);
    if (!pos) continue;
    const group = svgEl("g");
    const classes = ["node"];
    if (node.main_route) classes.push("main-route");
    if (node.landmark) classes.push("landmark");
    if (selection?.kind === "node" && selection.id === node.id) {
      classes.push("selected");
    }
    group.setAttribute("class", classes.join(" "));
    group.setAttribute("transform", `translate(${pos.x}, ${pos.y + 24})`);
    group.dataset.id = node.id;

    const circle = svgEl("circle");
    circle.setAttribute("r", String(NODE_RADIUS));
    group.appendChild(circle);

    if (node.landmark) {
      const badge = svgEl("text");
      badge.setAttribute("class", "landmark-badge");
      badge.setAttribute("x", String(NODE_RADIUS));
      badge.setAttribute("y", String(-NODE_RADIUS));
      badge.textContent = "★";
      group.appendChild(badge);
    }

    const label = svgEl("text");
    label.setAttribute("class", "node-label");
    label.setAttribute("y", String(NODE_RADIUS + 14));
    label.setAttribute("text-anchor", "middle");
    label.textContent = truncate(node.title);
    group.appendChild(label);

    const metrics = svgEl("text");
    metrics.setAttribute("class", "node-metrics");
    metrics.setAttribute("y", String(NODE_RADIUS + 28));
    metrics.setAttribute("text-anchor", "middle");
    metrics.textContent = metricsLabel(node.upvote_ratio, node.score_percentile);
    group.appendChild(metrics);

    group.addEventListener("click", () =>
      onSelect({ kind: "node", id: node.id }),
    );
    nodeLayer.appendChild(group);
  }
  svg.appendChild(nodeLayer);
  host.appendChild(svg);
}

function row(dl: HTMLDListElement, term: string, value: string): void {
  const dt = document.createElement("dt");
  dt.textContent = term;
  const dd = document.createElement("dd");
  dd.textContent = value;
  dl.append(dt, dd);
}

export function renderDetail(
  panel: HTMLElement,
  doc: MapDocument | null,
  selection: Selection | null,
): void {
  panel.replaceChildren();
  if (!doc || !selection) {
    panel.hidden = true;
    return;
  }
  panel.hidden = false;
  const heading = document.createElement("h3");
  const dl = document.createElement("dl");

  if (selection.kind === "node") {
    const node = doc.nodes.find((n) => n.id === selection.id);
    if (!node) {
      panel.hidden = true;
      return;
    }
    heading.textContent = node.title;
    row(dl, "Posted", new Date(node.created_at * 1000).toISOString());
    row(dl, "Score", String(node.score));
    row(dl, "Upvote ratio", node.upvote_ratio.toFixed(3));
    row(dl, "Score percentile", node.score_percentile.toFixed(3));
    row(dl, "Storyline", String(node.storyline));
    row(dl, "On main route", node.main_route ? "yes" : "no");
    panel.append(heading, dl);
    if (node.landmark) {
      const note = document.createElement("p");
      note.className = "landmark-note";
      note.textContent = `Representative landmark of storyline ${node.storyline}`;
      panel.appendChild(note);
    }
    return;
  }

  if (selection.kind === "edge") {
    const edge = doc.edges.find(
      (e) => e.source === selection.source && e.target === selection.target,
    );
    if (!edge) {
      panel.hidden = true;
      return;
    }
    heading.textContent = `${edge.source} → ${edge.target}`;
    row(dl, "Coherence", edge.coherence.toFixed(4));
    row(dl, "Acceptance", edge.acceptance.toFixed(4));
    row(dl, "Strength", edge.strength.toFixed(4));
    row(dl, "On main route", edge.main_route ? "yes" : "no");
    panel.append(heading, dl);
    return;
  }

  const line = doc.storylines.find((s) => s.id === selection.id);
  if (!line) {
    panel.hidden = true;
    return;
  }
  heading.textContent = `Storyline ${line.id}`;
  row(dl, "Events", String(line.events.length));
  row(dl, "Mean strength", line.mean_strength.toFixed(4));
  row(dl, "Mean acceptance", line.mean_acceptance.toFixed(4));
  panel.append(heading, dl);
}
