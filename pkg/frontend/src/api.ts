import type { CorpusInfo, ExtractResponse, PanelParams } from "./types.js";

/** A non-2xx reply, carrying the server's diagnostic fields. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
    readonly constraintClass?: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }

  get isInfeasible(): boolean {
    return this.status === 422;
  }
}

async function toApiError(response: Response): Promise<ApiError> {
  let detail = `${response.status} ${response.statusText}`;
  let constraintClass: string | undefined;
  try {
    const body = (await response.json()) as Record<string, unknown>;
    if (typeof body.detail === "string") detail = body.detail;
    if (typeof body.constraint_class === "string") {
      constraintClass = body.constraint_class;
    }
  } catch {
    // non-JSON error body: keep the status line
  }
  return new ApiError(response.status, detail, constraintClass);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = (input, init) => fetch(input, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) throw await toApiError(response);
    return response.json();
  }

  async listCorpora(): Promise<CorpusInfo[]> {
    return (await this.request("/api/corpora")) as CorpusInfo[];
  }

  async extract(
    corpusId: string,
    params: Partial<PanelParams>,
    signal?: AbortSignal,
  ): Promise<ExtractResponse> {
    return (await this.request("/api/extract", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ corpus_id: corpusId, ...params }),
      signal: signal ?? null,
    })) as ExtractResponse;
  }

  async getMap(mapId: string): Promise<ExtractResponse> {
    return (await this.request(
      `/api/map/${encodeURIComponent(mapId)}`,
    )) as ExtractResponse;
  }
}
