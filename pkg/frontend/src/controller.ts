// View-state machine for one debugging session. All probability math stays
// on the server; the controller only reflects projections and serializes
// user actions: at most one mutation is in flight, and a stale-version
// conflict triggers exactly one refetch instead of a resubmission.

import { AnswerValue, ApiClient, ApiError, CreateParams, SessionProjection } from "./api.js";

export type Screen = "start" | "query" | "result";

export interface ViewState {
  screen: Screen;
  pending: boolean;
  error: string | null;
  projection: SessionProjection | null;
}

const POLL_MS = 1000;

export class SessionController {
  state: ViewState = { screen: "start", pending: false, error: null, projection: null };
  refetches = 0;

  private listeners: Array<() => void> = [];
  private pollTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(private api: ApiClient) {}

  subscribe(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  private apply(projection: SessionProjection): void {
    this.state.projection = projection;
    this.state.error = null;
    if (projection.status === "computing") {
      this.schedulePoll();
    } else {
      this.state.screen = projection.status === "running" ? "query" : "result";
    }
    this.emit();
  }

  private schedulePoll(): void {
    if (this.pollTimer !== null) return;
    this.pollTimer = setTimeout(() => {
      this.pollTimer = null;
      void this.refresh();
    }, POLL_MS);
  }

  async start(params: CreateParams): Promise<void> {
    this.state.pending = true;
    this.state.error = null;
    this.emit();
    try {
      this.apply(await this.api.createSession(params));
    } catch (err) {
      this.state.error = describe(err);
      this.emit();
    } finally {
      this.state.pending = false;
      this.emit();
    }
  }

  async answer(value: AnswerValue): Promise<void> {
    const projection = this.state.projection;
    if (!projection || this.state.pending || this.state.screen !== "query") return;
    this.state.pending = true;
    this.state.error = null;
    this.emit();
    try {
      this.apply(await this.api.answer(projection.id, value, projection.version));
    } catch (err) {
      if (err instanceof ApiError && err.status === 409 && err.code === "stale_version") {
        // someone else advanced the session; adopt their state, do not resubmit
        this.refetches += 1;
        try {
          this.apply(await this.api.getSession(projection.id));
        } catch (refetchErr) {
          this.state.error = describe(refetchErr);
          this.emit();
        }
      } else {
        this.state.error = describe(err);
        this.emit();
      }
    } finally {
      this.state.pending = false;
      this.emit();
    }
  }

  async refresh(): Promise<void> {
    const projection = this.state.projection;
    if (!projection) return;
    try {
      this.apply(await this.api.getSession(projection.id));
    } catch (err) {
      this.state.error = describe(err);
      this.emit();
    }
  }

  reset(): void {
    this.state = { screen: "start", pending: false, error: null, projection: null };
    this.emit();
  }

  transcriptJson(): string {
    const projection = this.state.projection;
    return JSON.stringify(
      {
        history: projection?.history ?? [],
        result: projection?.result ?? [],
        status: projection?.status ?? "unknown",
      },
      null,
      2,
    );
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `${err.code}: ${err.message}`;
  if (err instanceof Error) return `network error: ${err.message}`;
  return "network error";
}
