/** Thin typed client for the JSON endpoints. The bearer token lives in
 * memory only; one query is in flight at a time and a new submission
 * aborts the previous one. */

export interface CellDoc {
  chr: string;
  start: number;
  end: number;
  ref: string;
  alt: string[];
  sample: string;
  gt?: string;
  pl?: number[];
  ad?: number[];
  dp?: number;
}

export interface QueryResponse {
  total: number;
  cells: CellDoc[];
}

export interface KnowledgeRecord {
  chr: string;
  pos: number;
  ref: string;
  alt: string;
  ac: number;
  an: number;
  af: number;
  sites: number;
}

export interface ApiErrorBody {
  error: { code: string; message: string };
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

export interface QueryBody {
  contig: string;
  start: number;
  end: number;
  samples?: string[];
  attrs?: string[];
  page?: { offset: number; limit: number };
}

export class ApiClient {
  private token: string | null = null;
  private inFlight: AbortController | null = null;

  constructor(
    private base: string = "",
    private fetchFn: typeof fetch = fetch,
  ) {}

  setToken(token: string | null): void {
    this.token = token;
  }

  private headers(): Record<string, string> {
    const h: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token !== null) h["Authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async request<T>(path: string, init: RequestInit): Promise<T> {
    this.inFlight?.abort();
    const controller = new AbortController();
    this.inFlight = controller;
    const resp = await this.fetchFn(this.base + path, {
      ...init,
      headers: this.headers(),
      signal: controller.signal,
    });
    if (this.inFlight === controller) this.inFlight = null;
    if (!resp.ok) {
      let code = "UnknownError";
      let message = resp.statusText;
      try {
        const body = (await resp.json()) as ApiErrorBody;
        code = body.error.code;
        message = body.error.message;
      } catch {
        /* non-JSON error body; keep the status text */
      }
      throw new ApiError(resp.status, code, message);
    }
    return (await resp.json()) as T;
  }

  queryArray(name: string, body: QueryBody): Promise<QueryResponse> {
    return this.request(`/arrays/${encodeURIComponent(name)}/query`, {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  queryKnowledge(
    contig: string,
    start: number,
    end: number,
  ): Promise<KnowledgeRecord[]> {
    const params = new URLSearchParams({
      contig,
      start: String(start),
      end: String(end),
    });
    return this.request(`/knowledge/query?${params}`, { method: "GET" });
  }
}
