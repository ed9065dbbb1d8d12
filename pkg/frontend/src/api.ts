// REST client for the debugger session service. The server is the single
// source of truth; this module only moves JSON.

export interface DiagnosisView {
  axioms: string[];
  axiom_texts: string[];
  probability: number;
}

export interface HistoryEntry {
  query: string[];
  answer: string;
}

export interface SessionProjection {
  id: string;
  version: number;
  status: string;
  leading: DiagnosisView[];
  query: string[];
  counts: { dx: number; dnx: number; dz: number };
  history: HistoryEntry[];
  result: DiagnosisView[];
}

export interface CreateParams {
  kb_text: string;
  profile?: unknown;
  n?: number;
  sigma?: number;
  strategy?: string;
  gamma?: number | null;
  seed?: number;
  stop_rule?: string;
}

export type AnswerValue = "yes" | "no" | "unknown";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function toProjection(response: Response): Promise<SessionProjection> {
  if (!response.ok) {
    let code = "error";
    let message = `request failed with status ${response.status}`;
    try {
      const body = await response.json();
      code = body.code ?? code;
      message = body.message ?? message;
    } catch {
      // non-JSON error body; keep the defaults
    }
    throw new ApiError(response.status, code, message);
  }
  return (await response.json()) as SessionProjection;
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  createSession(params: CreateParams): Promise<SessionProjection> {
    return this.fetchImpl(`${this.baseUrl}/api/v1/sessions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(params),
    }).then(toProjection);
  }

  getSession(id: string): Promise<SessionProjection> {
    return this.fetchImpl(`${this.baseUrl}/api/v1/sessions/${id}`).then(toProjection);
  }

  answer(id: string, answer: AnswerValue, version: number): Promise<SessionProjection> {
    return this.fetchImpl(`${this.baseUrl}/api/v1/sessions/${id}/answer`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ answer, version }),
    }).then(toProjection);
  }

  async deleteSession(id: string): Promise<void> {
    await this.fetchImpl(`${this.baseUrl}/api/v1/sessions/${id}`, { method: "DELETE" });
  }
}
