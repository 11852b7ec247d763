import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import {
  DashboardClient,
  StreamConnection,
  type FetchLike,
  type SocketLike,
  type StreamStatus,
} from "../src/client.js";

function fetchStub(replies: Array<{ status: number; body: unknown }>) {
  const calls: Array<{ url: string; init?: unknown }> = [];
  const impl: FetchLike = async (url, init) => {
    calls.push({ url, init });
    const next = replies.shift();
    if (!next) throw new Error("unexpected request");
    return { status: next.status, json: async () => next.body };
  };
  return { impl, calls };
}

describe("DashboardClient", () => {
  it("reads /state and unwraps availability", async () => {
    const { impl, calls } = fetchStub([
      { status: 200, body: { available: false, state: null } },
      { status: 200, body: { available: true, state: { schema: 1 } } },
    ]);
    const client = new DashboardClient("http://h:1/", impl);
    expect(await client.state()).toBeNull();
    expect(await client.state()).toEqual({ schema: 1 });
    expect(calls[0]!.url).toBe("http://h:1/state");
  });

  it("rejects empty text locally without touching the network", async () => {
    const { impl, calls } = fetchStub([]);
    const client = new DashboardClient("http://h:1", impl);
    const reply = await client.submitIntervention("   ");
    expect(reply.status).toBe("invalid");
    expect(calls.length).toBe(0);
  });

  it("posts trimmed text and passes the verdict through", async () => {
    const { impl, calls } = fetchStub([
      { status: 200, body: { status: "accepted" } },
      { status: 200, body: { status: "deferred" } },
    ]);
    const client = new DashboardClient("http://h:1", impl);
    expect((await client.submitIntervention("  go north  ")).status)
      .toBe("accepted");
    expect((await client.submitIntervention("again")).status).toBe("deferred");
    const first = calls[0]!.init as { method: string; body: string };
    expect(first.method).toBe("POST");
    expect(JSON.parse(first.body)).toEqual({ text: "go north" });
  });

  it("maps non-2xx onto rejected with the server's explanation", async () => {
    const { impl } = fetchStub([
      { status: 409, body: { error: "this run does not accept interventions" } },
    ]);
    const client = new DashboardClient("http://h:1", impl);
    const reply = await client.submitIntervention("anyone there");
    expect(reply.status).toBe("rejected");
    expect(reply.error).toMatch(/does not accept/);
  });
});

class FakeSocket implements SocketLike {
  onopen: (() => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: (() => void) | null = null;
  closed = false;
  close() { this.closed = true; }
}

describe("StreamConnection", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  function harness() {
    const sockets: FakeSocket[] = [];
    const frames: unknown[] = [];
    const statuses: StreamStatus[] = [];
    const conn = new StreamConnection({
      url: "ws://h:1/stream",
      factory: () => {
        const s = new FakeSocket();
        sockets.push(s);
        return s;
      },
      onFrame: (d) => frames.push(d),
      onStatus: (s) => statuses.push(s),
      baseDelayMs: 500,
      maxDelayMs: 4000,
    });
    return { sockets, frames, statuses, conn };
  }

  it("delivers parsed frames", () => {
    const { sockets, frames, statuses } = harness();
    sockets[0]!.onopen!();
    sockets[0]!.onmessage!({ data: JSON.stringify({ schema: 1, global_step: 5 }) });
    sockets[0]!.onmessage!({ data: "{not json" }); // ignored
    expect(frames).toEqual([{ schema: 1, global_step: 5 }]);
    expect(statuses).toEqual(["connecting", "open"]);
  });

  it("reconnects with doubling delay and resets after success", () => {
    const { sockets, statuses } = harness();
    sockets[0]!.onclose!(); // immediate failure
    expect(sockets.length).toBe(1);
    vi.advanceTimersByTime(499);
    expect(sockets.length).toBe(1);
    vi.advanceTimersByTime(1);
    expect(sockets.length).toBe(2);

    sockets[1]!.onclose!(); // second failure: delay is now 1000
    vi.advanceTimersByTime(999);
    expect(sockets.length).toBe(2);
    vi.advanceTimersByTime(1);
    expect(sockets.length).toBe(3);

    sockets[2]!.onopen!(); // success resets backoff
    sockets[2]!.onclose!();
    vi.advanceTimersByTime(500);
    expect(sockets.length).toBe(4);
    expect(statuses.filter((s) => s === "reconnecting").length).toBe(3);
  });

  it("ignores a close that follows an error on the same socket", () => {
    const { sockets } = harness();
    sockets[0]!.onerror!();
    sockets[0]!.onclose!(); // same socket: one retry, not two
    vi.advanceTimersByTime(500);
    expect(sockets.length).toBe(2);
    vi.advanceTimersByTime(10_000);
    expect(sockets.length).toBe(2);
  });

  it("stop() closes the socket and cancels retries", () => {
    const { sockets, conn, statuses } = harness();
    sockets[0]!.onclose!();
    conn.stop();
    vi.advanceTimersByTime(60_000);
    expect(sockets.length).toBe(1);
    expect(sockets[0]!.closed).toBe(true);
    expect(statuses[statuses.length - 1]).toBe("closed");
  });
});
