import { describe, expect, it } from "vitest";

import { App, type AppSurface, type BannerState, type ChipState } from "../src/app.js";
import type { DashboardClient } from "../src/client.js";
import type { Draw2D } from "../src/render.js";
import type { SparklineSpec } from "../src/sparkline.js";
import { STATE_SCHEMA_VERSION } from "../src/types.js";

class NullContext implements Draw2D {
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

function surface() {
  const ctx = new NullContext();
  const banners: BannerState[] = [];
  const chips: ChipState[] = [];
  const sparks: SparklineSpec[][] = [];
  const s: AppSurface = {
    ctx,
    canvasSize: 200,
    setBanner: (b) => banners.push(b),
    setChip: (c) => chips.push(c),
    setSparklines: (sp) => sparks.push(sp),
  };
  return { s, ctx, banners, chips, sparks };
}

function goodDoc() {
  return {
    schema: STATE_SCHEMA_VERSION,
    global_step: 10,
    episode: 1,
    update_idx: 0,
    intervention_type: "llm",
    config_name: "X",
  };
}

describe("App.handleFrame", () => {
  it("renders decodable frames and counts them", () => {
    const { s, ctx, banners } = surface();
    const app = new App(s, {} as DashboardClient);
    app.handleFrame(goodDoc());
    app.handleFrame(goodDoc());
    expect(app.framesRendered).toBe(2);
    expect(ctx.ops).toBeGreaterThan(0);
    expect(banners.every((b) => b.kind === "none")).toBe(true);
  });

  it("turns an unknown schema into an error banner, not a render", () => {
    const { s, ctx, banners } = surface();
    const app = new App(s, {} as DashboardClient);
    app.handleFrame({ ...goodDoc(), schema: 7 });
    expect(app.framesRendered).toBe(0);
    expect(ctx.ops).toBe(0);
    expect(banners[0]!.kind).toBe("error");
    expect(banners[0]!.text).toMatch(/schema/);
  });

  it("flags stream drops on the banner", () => {
    const { s, banners } = surface();
    const app = new App(s, {} as DashboardClient);
    app.streamStatus("reconnecting");
    expect(banners[0]).toEqual({
      kind: "reconnecting",
      text: "stream lost; reconnecting",
    });
  });
});

describe("App.submit", () => {
  it("echoes the mediator's task list after acceptance", async () => {
    const client = {
      submitIntervention: async () => ({ status: "accepted" as const }),
      state: async () => ({
        ...goodDoc(),
        mediation: {
          windows: [5, 0],
          tasks: [{ agent: 0, x: 10, y: -20 }, null],
          total_assigned: 1,
          errors: 0,
        },
      }),
    } as unknown as DashboardClient;
    const { s, chips } = surface();
    const app = new App(s, client);
    const reply = await app.submit("go");
    expect(reply.status).toBe("accepted");
    expect(chips[0]).toEqual({
      status: "accepted",
      detail: "task(0, 10, -20)",
    });
  });

  it("shows deferred as-is", async () => {
    const client = {
      submitIntervention: async () => ({ status: "deferred" as const }),
    } as unknown as DashboardClient;
    const { s, chips } = surface();
    const app = new App(s, client);
    const reply = await app.submit("again");
    expect(reply.status).toBe("deferred");
    expect(chips[0]!.status).toBe("deferred");
  });

  it("surfaces client-side validation without a round trip", async () => {
    const client = {
      submitIntervention: async (text: string) =>
        text.trim()
          ? { status: "accepted" as const }
          : { status: "invalid" as const, error: "intervention text is empty" },
    } as unknown as DashboardClient;
    const { s, chips } = surface();
    const app = new App(s, client);
    const reply = await app.submit("  ");
    expect(reply.status).toBe("invalid");
    expect(chips[0]!.detail).toMatch(/empty/);
  });
});

describe("App.refreshMetrics", () => {
  it("hands the panel one sparkline per tracked metric", async () => {
    const client = {
      metrics: async () => ({
        episodes: 2,
        total_task_count: 3,
        records: [
          { episode: 1, episode_reward: 1, extinguishing_trees_reward: 5,
            crash_count: 0, task_count: 1, total_task_count: 1 },
          { episode: 2, episode_reward: 3, extinguishing_trees_reward: 9,
            crash_count: 1, task_count: 2, total_task_count: 3 },
        ],
        interventions: { accepted: 0, deferred: 0 },
      }),
    } as unknown as DashboardClient;
    const { s, sparks } = surface();
    const app = new App(s, client);
    await app.refreshMetrics();
    expect(sparks[0]!.map((x) => x.metric)).toEqual([
      "episode_reward",
      "extinguishing_trees_reward",
      "crash_count",
    ]);
    expect(sparks[0]![0]!.last).toBe(3);
  });
});
