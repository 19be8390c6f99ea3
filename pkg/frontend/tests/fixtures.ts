import {
  createServer,
  type IncomingMessage,
  type Server,
  type ServerResponse,
} from "node:http";
import type { AddressInfo } from "node:net";
import type {
  CorpusInfo,
  Diagnostics,
  ExtractResponse,
  MapDocument,
  MapEdge,
  MapNode,
} from "../src/types.js";

const BASE_TIME = 1_600_000_000;
const HOUR = 3600;

function diagnostics(): Diagnostics {
  return {
    avg_score_percentile: 0.8,
    cluster_coverage: [0.9, 0.7],
    avg_cluster_coverage: 0.8,
    coverage_satisfied: true,
    lp_objective: 0.8,
    rounded_min_strength: 0.75,
    acceptance_shortfall: 0,
    lp_variables: 12,
    lp_constraints: 30,
  };
}

export function makeNode(
  id: string,
  index: number,
  overrides: Partial<MapNode> = {},
): MapNode {
  return {
    id,
    title: `event ${id}`,
    created_at: BASE_TIME + index * HOUR,
    score: 500 + index,
    upvote_ratio: 0.9,
    score_percentile: 0.8,
    storyline: 0,
    main_route: false,
    landmark: false,
    ...overrides,
  };
}

export function makeEdge(
  source: string,
  target: string,
  overrides: Partial<MapEdge> = {},
): MapEdge {
  return {
    source,
    target,
    coherence: 0.7,
    acceptance: 0.9,
    strength: 0.63,
    main_route: false,
    ...overrides,
  };
}

/** A single start-to-end chain: one storyline, no landmarks. */
export function linearDocument(length = 4): MapDocument {
  const ids = Array.from({ length }, (_, i) => `e${i}`);
  const nodes = ids.map((id, i) =>
    makeNode(id, i, { main_route: true, storyline: 0 }),
  );
  const edges = ids
    .slice(0, -1)
    .map((id, i) => makeEdge(id, ids[i + 1]!, { main_route: true }));
  return {
    schema_version: 1,
    community: "synthetic",
    params: { k: length, mincover: 0, minscore: 0 },
    fingerprint: { corpus: "c", embeddings: "e", config: "f" },
    nodes,
    edges,
    storylines: [
      { id: 0, events: ids, mean_strength: 0.63, mean_acceptance: 0.9 },
    ],
    main_route: ids,
    landmarks: [],
    diagnostics: diagnostics(),
  };
}

/** Two parallel branches between shared endpoints: two storylines, two landmarks. */
export function diamondDocument(): MapDocument {
  const nodes = [
    makeNode("start", 0, { main_route: true, storyline: 0 }),
    makeNode("a", 1, { main_route: true, storyline: 0, landmark: true }),
    makeNode("b", 1, { storyline: 1, landmark: true }),
    makeNode("end", 2, { main_route: true, storyline: 0 }),
  ];
  const edges = [
    makeEdge("start", "a", { main_route: true, strength: 0.81 }),
    makeEdge("a", "end", { main_route: true, strength: 0.72 }),
    makeEdge("start", "b", { strength: 0.5 }),
    makeEdge("b", "end", { strength: 0.45 }),
  ];
  return {
    schema_version: 1,
    community: "synthetic",
    params: { k: 3, mincover: 0, minscore: 0 },
    fingerprint: { corpus: "c", embeddings: "e", config: "f" },
    nodes,
    edges,
    storylines: [
      {
        id: 0,
        events: ["start", "a", "end"],
        mean_strength: 0.765,
        mean_acceptance: 0.9,
      },
      { id: 1, events: ["b"], mean_strength: 0, mean_acceptance: 0.9 },
    ],
    main_route: ["start", "a", "end"],
    landmarks: ["a", "b"],
    diagnostics: diagnostics(),
  };
}

export function responseFor(
  mapId: string,
  corpusId: string,
  doc: MapDocument,
): ExtractResponse {
  return { map_id: mapId, corpus_id: corpusId, map: doc };
}

export interface RecordedRequest {
  method: string;
  path: string;
  body: Record<string, unknown> | null;
}

type Reply = { status: number; body: unknown };

/**
 * In-process stand-in for the extraction service, speaking the same HTTP
 * contract: /api/corpora, /api/extract, /api/map/{id}.  The default
 * extract behavior is deterministic in the request config (same config →
 * same map id) and rejects minscore > 0.9 as infeasible.
 */
export class FixtureService {
  readonly requests: RecordedRequest[] = [];
  extractDelayMs = 0;
  corpora: CorpusInfo[] = [
    {
      id: "corpus-1",
      communities: [{ community: "synthetic", count: 8 }],
      has_embeddings: true,
    },
  ];
  private served = new Map<string, ExtractResponse>();
  private server: Server | null = null;

  onExtract: (body: Record<string, unknown>) => Reply = (body) => {
    const minscore = Number(body.minscore ?? 0.85);
    if (minscore > 0.9) {
      return {
        status: 422,
        body: {
          detail: "acceptance constraint infeasible: no event set clears minscore",
          constraint_class: "acceptance",
        },
      };
    }
    const k = Number(body.k ?? 8);
    const mapId = `map-${Object.entries(body)
      .filter(([key]) => key !== "corpus_id")
      .sort(([a], [b]) => (a < b ? -1 : 1))
      .map(([key, value]) => `${key}=${value}`)
      .join("&")}`;
    const response = responseFor(
      mapId,
      String(body.corpus_id),
      linearDocument(Math.max(2, Math.min(k, 6))),
    );
    this.served.set(mapId, response);
    return { status: 200, body: response };
  };

  async start(): Promise<string> {
    this.server = createServer((req, res) => this.handle(req, res));
    await new Promise<void>((resolve) =>
      this.server!.listen(0, "127.0.0.1", resolve),
    );
    const { port } = this.server!.address() as AddressInfo;
    return `http://127.0.0.1:${port}`;
  }

  async stop(): Promise<void> {
    const server = this.server;
    if (!server) return;
    this.server = null;
    server.closeAllConnections();
    await new Promise<void>((resolve) => server.close(() => resolve()));
  }

  private handle(req: IncomingMessage, res: ServerResponse): void {
    // the explorer runs cross-origin in tests, so speak CORS like the
    // real service does
    res.setHeader("Access-Control-Allow-Origin", "*");
    if (req.method === "OPTIONS") {
      res.writeHead(204, {
        "Access-Control-Allow-Methods": "GET,POST,OPTIONS",
        "Access-Control-Allow-Headers": "Content-Type",
      });
      res.end();
      return;
    }
    const chunks: Buffer[] = [];
    req.on("data", (chunk: Buffer) => chunks.push(chunk));
    req.on("end", () => {
      const raw = Buffer.concat(chunks).toString("utf-8");
      const body = raw ? (JSON.parse(raw) as Record<string, unknown>) : null;
      const path = req.url ?? "/";
      this.requests.push({ method: req.method ?? "GET", path, body });
      this.route(req.method ?? "GET", path, body, res);
    });
  }

  private route(
    method: string,
    path: string,
    body: Record<string, unknown> | null,
    res: ServerResponse,
  ): void {
    const send = (reply: Reply) => {
      const write = () => {
        if (res.writableEnded || res.destroyed) return;
        res.writeHead(reply.status, { "Content-Type": "application/json" });
        res.end(JSON.stringify(reply.body));
      };
      if (this.extractDelayMs > 0 && path === "/api/extract") {
        setTimeout(write, this.extractDelayMs);
      } else {
        write();
      }
    };

    if (method === "GET" && path === "/healthz") {
      send({ status: 200, body: { status: "ok" } });
    } else if (method === "GET" && path === "/api/corpora") {
      send({ status: 200, body: this.corpora });
    } else if (method === "POST" && path === "/api/extract") {
      if (!body || typeof body.corpus_id !== "string") {
        send({
          status: 400,
          body: { detail: "invalid request: body needs a corpus_id" },
        });
      } else if (!this.corpora.some((c) => c.id === body.corpus_id)) {
        send({
          status: 404,
          body: { detail: `unknown corpus: ${String(body.corpus_id)}` },
        });
      } else {
        send(this.onExtract(body));
      }
    } else if (method === "GET" && path.startsWith("/api/map/")) {
      const mapId = decodeURIComponent(path.slice("/api/map/".length));
      const hit = this.served.get(mapId);
      if (hit) send({ status: 200, body: hit });
      else send({ status: 404, body: { detail: `unknown map: ${mapId}` } });
    } else {
      send({ status: 404, body: { detail: "no such route" } });
    }
  }
}

/** Poll until `cond` holds; fail loudly if it never does. */
export async function until(
  cond: () => boolean,
  timeoutMs = 2000,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!cond()) {
    if (Date.now() > deadline) throw new Error("condition never became true");
    await new Promise((resolve) => setTimeout(resolve, 5));
  }
}
