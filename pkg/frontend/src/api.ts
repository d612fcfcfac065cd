/** Thin typed client over the decoding service's JSON API. */

import type {
  Edit,
  ErrorBody,
  Health,
  Hypothesis,
  SearchParams,
  SessionDetail,
  SessionSnapshot,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ status: number; json(): Promise<unknown> }>;

async function unwrap<T>(resp: {
  status: number;
  json(): Promise<unknown>;
}): Promise<T> {
  let body: unknown;
  try {
    body = await resp.json();
  } catch {
    throw new ApiError(resp.status, "bad_response", "response was not JSON");
  }
  if (resp.status >= 400) {
    const err = (body as ErrorBody)?.error;
    throw new ApiError(
      resp.status,
      err?.code ?? "unknown",
      err?.message ?? `HTTP ${resp.status}`,
    );
  }
  return body as T;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.fetchImpl(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    }).then((r) => unwrap<T>(r));
  }

  private get<T>(path: string): Promise<T> {
    return this.fetchImpl(this.baseUrl + path).then((r) => unwrap<T>(r));
  }

  health(): Promise<Health> {
    return this.get("/healthz");
  }

  createSession(
    source: string[],
    config: SearchParams = {},
  ): Promise<SessionSnapshot> {
    return this.post("/sessions", { source, config });
  }

  step(sessionId: string, edits: Edit[] = []): Promise<SessionSnapshot> {
    return this.post(`/sessions/${sessionId}/step`, { edits });
  }

  getSession(sessionId: string): Promise<SessionDetail> {
    return this.get(`/sessions/${sessionId}`);
  }

  generate(
    source: string[],
    config: SearchParams = {},
  ): Promise<{ hypotheses: Hypothesis[] }> {
    return this.post("/generate", { source, config });
  }
}
