import type { InterventionReply, MetricsDoc, StateDoc } from "./types.js";

/** Minimal response surface so tests can stub fetch with plain objects. */
export interface ResponseLike {
  status: number;
  json(): Promise<unknown>;
}
export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<ResponseLike>;

/** HTTP side of the server contract: /state, /metrics, /intervention. */
export class DashboardClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...args) =>
      (globalThis.fetch as unknown as FetchLike)(...args),
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async state(): Promise<StateDoc | null> {
    const res = await this.fetchImpl(this.url("/state"));
    const doc = (await res.json()) as { available: boolean; state: unknown };
    return doc.available ? (doc.state as StateDoc) : null;
  }

  async metrics(): Promise<MetricsDoc> {
    const res = await this.fetchImpl(this.url("/metrics"));
    return (await res.json()) as MetricsDoc;
  }

  /**
   * POST free-form strategy text. Empty input never reaches the network;
   * the server's own verdict ("accepted" / "deferred") passes through,
   * and non-2xx turns into "rejected" with the server's explanation.
   */
  async submitIntervention(text: string): Promise<InterventionReply> {
    const trimmed = text.trim();
    if (!trimmed) {
      return { status: "invalid", error: "intervention text is empty" };
    }
    const res = await this.fetchImpl(this.url("/intervention"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text: trimmed }),
    });
    const body = (await res.json()) as { status?: string; error?: string };
    if (res.status !== 200) {
      return { status: "rejected", error: body.error ?? `HTTP ${res.status}` };
    }
    return { status: body.status as InterventionReply["status"] };
  }
}

/** The subset of a WebSocket both browsers and the `ws` package expose. */
export interface SocketLike {
  onopen: (() => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  close(): void;
}
export type SocketFactory = (url: string) => SocketLike;

export type StreamStatus = "connecting" | "open" | "reconnecting" | "closed";

export interface StreamOptions {
  url: string;
  factory: SocketFactory;
  onFrame(doc: unknown): void;
  onStatus(status: StreamStatus): void;
  baseDelayMs?: number;
  maxDelayMs?: number;
}

/**
 * Subscribe to /stream with automatic reconnection. Each failure doubles
 * the retry delay up to the cap; a successful open resets it. `stop()`
 * is final.
 */
export class StreamConnection {
  private socket: SocketLike | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private delay: number;
  private stopped = false;

  constructor(private readonly opts: StreamOptions) {
    this.delay = opts.baseDelayMs ?? 500;
    this.open();
  }

  private open(): void {
    if (this.stopped) return;
    if (this.socket === null) this.opts.onStatus("connecting");
    const sock = this.opts.factory(this.opts.url);
    this.socket = sock;
    let settled = false;
    sock.onopen = () => {
      this.delay = this.opts.baseDelayMs ?? 500;
      this.opts.onStatus("open");
    };
    sock.onmessage = (ev) => {
      let doc: unknown;
      try {
        doc = JSON.parse(String(ev.data));
      } catch {
        return; // not ours; ignore
      }
      this.opts.onFrame(doc);
    };
    const retry = () => {
      if (settled || this.stopped) return;
      settled = true;
      this.opts.onStatus("reconnecting");
      this.timer = setTimeout(() => this.open(), this.delay);
      this.delay = Math.min(this.delay * 2, this.opts.maxDelayMs ?? 8000);
    };
    sock.onclose = retry;
    sock.onerror = retry;
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) clearTimeout(this.timer);
    if (this.socket !== null) {
      try {
        this.socket.close();
      } catch {
        // already gone
      }
    }
    this.opts.onStatus("closed");
  }
}
