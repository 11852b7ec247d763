/**
 * End-to-end loop against a real training server: render a live frame,
 * stream over the websocket, and drive an intervention through the
 * mediation queue, including the cooldown-deferred path.
 *
 * Spawns `firecrew serve` (the Python package must be installed) with a
 * throttled mock run so scheduling points arrive at a human pace.
 */
import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import WebSocket from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { App, type AppSurface, type BannerState, type ChipState } from "../src/app.js";
import { DashboardClient, StreamConnection, type SocketLike } from "../src/client.js";
import type { Draw2D } from "../src/render.js";

const PORT = 21000 + (process.pid % 4000);
const BASE = `http://127.0.0.1:${PORT}`;

// cooldown 600 at ~400 steps/s keeps scheduling points ~1.5 s apart,
// which makes the deferred-while-queued sequence deterministic
const CONFIG = `name: "DASH_IT"
env_parameters:
  training: 1
  human_intervention: 1
  task: 0
  ext_fire_reward: 1000.0
  prep_tree_reward: 0.1
  water_pickup_reward: 0.1
  fire_out_reward: 0.0
  crash_reward: -100.0
  fire_close_to_village_reward: 0.0
no_graphics: True
intervention_type: "llm"
model: "mock"
shot: "few"
lr: 0.005
lambda_: 0.95
gamma: 0.99
sgd_minibatch_size: 900
train_batch_size: 9000
num_sgd_iter: 3
clip_param: 0.2
extensions:
  seed: 9
  n_agents: 3
  tree_count: 64
  episode_length: 150
  cooldown_steps: 600
  total_steps: 2000000
`;

class CountingContext implements Draw2D {
  ops = 0;
  fillStyle = "";
  strokeStyle = "";
  lineWidth = 1;
  font = "";
  beginPath() { this.ops++; }
  moveTo() { this.ops++; }
  lineTo() { this.ops++; }
  arc() { this.ops++; }
  closePath() { this.ops++; }
  fill() { this.ops++; }
  stroke() { this.ops++; }
  fillRect() { this.ops++; }
  strokeRect() { this.ops++; }
  clearRect() { this.ops++; }
  fillText() { this.ops++; }
}

function makeSurface() {
  const ctx = new CountingContext();
  const banners: BannerState[] = [];
  const chips: ChipState[] = [];
  const s: AppSurface = {
    ctx,
    canvasSize: 320,
    setBanner: (b) => banners.push(b),
    setChip: (c) => chips.push(c),
    setSparklines: () => undefined,
  };
  return { s, ctx, banners, chips };
}

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

async function waitFor<T>(probe: () => Promise<T | null>, what: string,
                          deadlineMs = 60_000): Promise<T> {
  const t0 = Date.now();
  for (;;) {
    try {
      const got = await probe();
      if (got !== null) return got;
    } catch {
      // server still starting; keep polling
    }
    if (Date.now() - t0 > deadlineMs) {
      throw new Error(`timed out waiting for ${what}`);
    }
    await sleep(200);
  }
}

let proc: ChildProcess;
let client: DashboardClient;
let stderrTail = "";

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "firecrew-dash-"));
  const cfgPath = join(dir, "dash.yaml");
  writeFileSync(cfgPath, CONFIG);
  proc = spawn(
    "firecrew",
    ["serve", "--config", cfgPath, "--port", String(PORT),
     "--backend", "mock", "--throttle", "400",
     "--run-dir", join(dir, "run")],
    { stdio: ["ignore", "ignore", "pipe"] },
  );
  proc.stderr!.on("data", (chunk) => {
    stderrTail = (stderrTail + String(chunk)).slice(-2000);
  });
  client = new DashboardClient(BASE);
  await waitFor(async () => {
    const res = await fetch(`${BASE}/state`);
    return res.status === 200 ? true : null;
  }, `server on :${PORT} (stderr: ${stderrTail})`);
}, 120_000);

afterAll(() => {
  proc?.kill("SIGKILL");
});

describe("dashboard against a live server", () => {
  it("renders at least one frame from /state", async () => {
    const { s, ctx, banners } = makeSurface();
    const app = new App(s, client);
    const doc = await waitFor(() => client.state(), "a published snapshot");
    app.handleFrame(doc);
    expect(app.framesRendered).toBeGreaterThanOrEqual(1);
    expect(ctx.ops).toBeGreaterThan(0);
    expect(banners[banners.length - 1]!.kind).toBe("none");
  }, 90_000);

  it("streams frames over the websocket", async () => {
    const { s } = makeSurface();
    const app = new App(s, client);
    const statuses: string[] = [];
    let conn: StreamConnection | null = null;
    try {
      const first = new Promise<unknown>((resolve) => {
        conn = new StreamConnection({
          url: `ws://127.0.0.1:${PORT}/stream`,
          factory: (url) => new WebSocket(url) as unknown as SocketLike,
          onFrame: resolve,
          onStatus: (st) => statuses.push(st),
        });
      });
      const doc = await first;
      app.handleFrame(doc);
      expect(app.framesRendered).toBe(1);
      expect(statuses).toContain("open");
    } finally {
      conn!.stop();
    }
  }, 90_000);

  it("routes a submitted intervention into the mediation queue within one scheduling point", async () => {
    const { s, chips } = makeSurface();
    const app = new App(s, client);

    // wait for a steady state: at least one episode record and a live
    // mediation block, then baseline the task counter
    await waitFor(async () => {
      const m = await client.metrics();
      return m.records.length >= 1 ? true : null;
    }, "first episode record");
    const before = await client.metrics();
    const state0 = await waitFor(() => client.state(), "state with mediation");
    const assigned0 = state0.mediation!.total_assigned;

    const reply = await app.submit("send everyone to the largest fire cluster");
    expect(reply.status).toBe("accepted");
    expect(chips[chips.length - 1]!.status).toBe("accepted");

    // the next scheduling point must consume the text as the strategy
    const human = await waitFor(async () => {
      const st = await client.state();
      return st && st.latest_trace &&
        (st.latest_trace as Record<string, unknown>).strategy_source === "human"
        ? st
        : null;
    }, "a human-sourced mediation round");
    // exactly the round that consumed it, not several rounds later
    expect(human.mediation!.total_assigned).toBeLessThanOrEqual(assigned0 + 6);

    // and the assignment shows up in the served metrics
    await waitFor(async () => {
      const m = await client.metrics();
      return m.total_task_count > before.total_task_count ? true : null;
    }, "task count increment in /metrics");
  }, 120_000);

  it("defers a second submission while the first is still queued", async () => {
    // anchor right after a scheduling round: every window freshly wound
    // up means the sink cannot drain for hundreds of steps, so the first
    // offer parks in the slot and the immediate second one must bounce
    await waitFor(async () => {
      const st = await client.state();
      return st && st.mediation && st.mediation.windows.some((w) => w > 450)
        ? true
        : null;
    }, "a freshly wound cooldown window");
    const a = await client.submitIntervention("hold the south ridge");
    const b = await client.submitIntervention("no, the north ridge");
    expect(a.status).toBe("accepted");
    expect(b.status).toBe("deferred");

    const m = await client.metrics();
    expect(m.interventions.deferred).toBeGreaterThanOrEqual(1);
    expect(m.interventions.accepted).toBeGreaterThanOrEqual(2);
  }, 90_000);

  it("empty text never reaches the server", async () => {
    const before = await client.metrics();
    const reply = await client.submitIntervention("   ");
    expect(reply.status).toBe("invalid");
    const after = await client.metrics();
    expect(after.interventions.accepted).toBe(before.interventions.accepted);
    expect(after.interventions.deferred).toBe(before.interventions.deferred);
  }, 90_000);
});
