/** Typed client for the duorec HTTP API. All numbers shown in the UI come
 * from these responses; the client never recomputes scores. */

export interface ServiceConfig {
  config: {
    m: number;
    mode: string;
    n_w: number;
    n_e: number;
    cache_k: number;
    positive_only: boolean;
    metric: string;
  };
  n: number;
  lexicon_size: number;
  dim: number | null;
  languages: string[];
  default_lang: string;
  modes: string[];
  built_at: number | null;
}

export interface DocumentRecord {
  id: string;
  text: string;
  lang: string;
  image_url?: string;
  meta?: Record<string, string>;
}

export interface NeighborEntry {
  id: string;
  score: number;
  snippet: string;
  lang: string;
  image_url?: string;
}

export interface NeighborsResponse {
  id: string;
  word: NeighborEntry[];
  emb: NeighborEntry[];
}

export interface SearchResponse {
  query: string;
  lang: string;
  results: NeighborEntry[];
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message?: string,
  ) {
    super(message ?? `${status}: ${code}`);
  }
}

async function request<T>(url: string, signal?: AbortSignal): Promise<T> {
  let response: { ok: boolean; status: number; json(): Promise<unknown> };
  try {
    response = await fetch(url, { signal });
  } catch (err) {
    if ((err as Error).name === "AbortError") throw err;
    throw new ApiError(0, "unreachable", "service unreachable");
  }
  const body = (await response.json()) as Record<string, unknown>;
  if (!response.ok) {
    const code = typeof body.error === "string" ? body.error : "unknown";
    throw new ApiError(response.status, code, body.detail as string | undefined);
  }
  return body as T;
}

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  getConfig(signal?: AbortSignal): Promise<ServiceConfig> {
    return request(`${this.baseUrl}/config`, signal);
  }

  getDocument(id: string, signal?: AbortSignal): Promise<{ document: DocumentRecord }> {
    return request(`${this.baseUrl}/documents/${encodeURIComponent(id)}`, signal);
  }

  getNeighbors(
    id: string,
    nw: number,
    ne: number,
    signal?: AbortSignal,
  ): Promise<NeighborsResponse> {
    const path = `${this.baseUrl}/documents/${encodeURIComponent(id)}/neighbors`;
    return request(`${path}?nw=${nw}&ne=${ne}`, signal);
  }

  search(query: string, n: number, signal?: AbortSignal): Promise<SearchResponse> {
    return request(
      `${this.baseUrl}/search?q=${encodeURIComponent(query)}&n=${n}`,
      signal,
    );
  }
}
