// Shapes of the documents served by the narrative-atlas HTTP API.
// The client never recomputes any of these values; it is a pure view.

export const SUPPORTED_SCHEMA_VERSION = 1;

export interface MapNode {
  id: string;
  title: string;
  created_at: number;
  score: number;
  upvote_ratio: number;
  score_percentile: number;
  storyline: number;
  main_route: boolean;
  landmark: boolean;
}

export interface MapEdge {
  source: string;
  target: string;
  coherence: number;
  acceptance: number;
  strength: number;
  main_route: boolean;
}

export interface StorylineInfo {
  id: number;
  events: string[];
  mean_strength: number;
  mean_acceptance: number;
}

export interface Diagnostics {
  avg_score_percentile: number;
  cluster_coverage: number[];
  avg_cluster_coverage: number;
  coverage_satisfied: boolean;
  lp_objective: number;
  rounded_min_strength: number;
  acceptance_shortfall: number;
  lp_variables: number;
  lp_constraints: number;
}

export interface MapDocument {
  schema_version: number;
  community: string | null;
  params: Record<string, unknown>;
  fingerprint: Record<string, string>;
  nodes: MapNode[];
  edges: MapEdge[];
  storylines: StorylineInfo[];
  main_route: string[];
  landmarks: string[];
  diagnostics: Diagnostics;
}

export interface ExtractResponse {
  map_id: string;
  corpus_id: string;
  map: MapDocument;
}

export interface CommunityCount {
  community: string;
  count: number;
}

export interface CorpusInfo {
  id: string;
  communities: CommunityCount[];
  has_embeddings: boolean;
}

/** The tunable subset of the extraction config exposed in the panel. */
export interface PanelParams {
  k: number;
  mincover: number;
  minscore: number;
  tau: number;
  seed: number;
}

export type Selection =
  | { kind: "node"; id: string }
  | { kind: "edge"; source: string; target: string }
  | { kind: "storyline"; id: number };
