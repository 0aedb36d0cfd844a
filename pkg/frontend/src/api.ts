// REST + SSE client for the session service. The transports are
// injectable so tests can replay recorded traffic without a server.

import type {
  MapInfo,
  SessionEvent,
  StepResponse,
  WireSession,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface EventSourceLike {
  onmessage: ((ev: { data: string; lastEventId: string }) => void) | null;
  onerror: ((ev: unknown) => void) | null;
  close(): void;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class Client {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: body !== undefined ? { "Content-Type": "application/json" } : {},
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        detail = (await resp.json()).detail ?? detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(resp.status, detail);
    }
    if (resp.status === 204) return undefined as T;
    return (await resp.json()) as T;
  }

  listMaps(): Promise<MapInfo[]> {
    return this.request("GET", "/maps");
  }

  createSession(body: {
    map_name?: string;
    map_text?: string;
    planner: string;
    advisor?: string;
    autopilot?: boolean;
  }): Promise<WireSession> {
    return this.request("POST", "/sessions", body);
  }

  getSession(id: string): Promise<WireSession> {
    return this.request("GET", `/sessions/${id}`);
  }

  step(id: string, count: number): Promise<StepResponse> {
    return this.request("POST", `/sessions/${id}/step`, { count });
  }

  submitVerdicts(
    id: string,
    verdicts: { id: number; accept: boolean }[],
  ): Promise<{ event: SessionEvent; phase: string; seq: number }> {
    return this.request("POST", `/sessions/${id}/verdict`, { verdicts });
  }

  deleteSession(id: string): Promise<void> {
    return this.request("DELETE", `/sessions/${id}`);
  }

  eventsUrl(id: string, since: number): string {
    return `${this.baseUrl}/sessions/${id}/events?since=${since}`;
  }
}

// Stream wrapper: delivers events in order and reconnects from the last
// seen sequence number, so no gap can slip through a dropped connection.
export class EventFeed {
  private source: EventSourceLike | null = null;
  private lastSeq: number;
  private closed = false;

  constructor(
    private client: Client,
    private sessionId: string,
    sinceSeq: number,
    private onEvent: (ev: SessionEvent) => void,
    private onStatus: (connected: boolean) => void,
    private factory: EventSourceFactory,
    private reconnectDelayMs = 1000,
    private schedule: (fn: () => void, ms: number) => void = (fn, ms) =>
      setTimeout(fn, ms),
  ) {
    this.lastSeq = sinceSeq;
    this.connect();
  }

  private connect(): void {
    if (this.closed) return;
    this.source = this.factory(this.client.eventsUrl(this.sessionId, this.lastSeq));
    this.onStatus(true);
    this.source.onmessage = (msg) => {
      const event = JSON.parse(msg.data) as SessionEvent | Record<string, never>;
      if (!("seq" in event)) return; // end-of-stream marker
      if (event.seq <= this.lastSeq) return; // replay overlap
      this.lastSeq = event.seq;
      this.onEvent(event as SessionEvent);
    };
    this.source.onerror = () => {
      this.onStatus(false);
      this.source?.close();
      this.schedule(() => this.connect(), this.reconnectDelayMs);
    };
  }

  close(): void {
    this.closed = true;
    this.source?.close();
  }
}
