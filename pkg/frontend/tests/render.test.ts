import { describe, expect, it } from "vitest";

import {
  legendEntries,
  renderFrame,
  TREE_COLORS,
  type Draw2D,
} from "../src/render.js";
import {
  TREE_ALIVE,
  TREE_BURNING,
  TREE_WET,
  type FrameView,
  type WorldDoc,
} from "../src/types.js";

/** Records every draw call; good enough to assert on, stable to compare. */
class RecordingContext implements Draw2D {
  calls: Array<[string, ...unknown[]]> = [];
  private _fillStyle = "";
  private _strokeStyle = "";
  private _lineWidth = 1;
  private _font = "";

  get fillStyle(): string { return this._fillStyle; }
  set fillStyle(v: string) { this._fillStyle = v; this.calls.push(["fillStyle", v]); }
  get strokeStyle(): string { return this._strokeStyle; }
  set strokeStyle(v: string) { this._strokeStyle = v; this.calls.push(["strokeStyle", v]); }
  get lineWidth(): number { return this._lineWidth; }
  set lineWidth(v: number) { this._lineWidth = v; this.calls.push(["lineWidth", v]); }
  get font(): string { return this._font; }
  set font(v: string) { this._font = v; this.calls.push(["font", v]); }

  beginPath() { this.calls.push(["beginPath"]); }
  moveTo(x: number, y: number) { this.calls.push(["moveTo", x, y]); }
  lineTo(x: number, y: number) { this.calls.push(["lineTo", x, y]); }
  arc(x: number, y: number, r: number, a0: number, a1: number) {
    this.calls.push(["arc", x, y, r, a0, a1]);
  }
  closePath() { this.calls.push(["closePath"]); }
  fill() { this.calls.push(["fill"]); }
  stroke() { this.calls.push(["stroke"]); }
  fillRect(x: number, y: number, w: number, h: number) {
    this.calls.push(["fillRect", x, y, w, h]);
  }
  strokeRect(x: number, y: number, w: number, h: number) {
    this.calls.push(["strokeRect", x, y, w, h]);
  }
  clearRect(x: number, y: number, w: number, h: number) {
    this.calls.push(["clearRect", x, y, w, h]);
  }
  fillText(text: string, x: number, y: number) {
    this.calls.push(["fillText", text, x, y]);
  }
}

function world(): WorldDoc {
  return {
    step: 17,
    terminal: false,
    burning: 1,
    env_half_extent: 750,
    island_half_extent: 600,
    village_center: [300, 300],
    village_radius: 150,
    trees: {
      x: [0, 100, -200],
      y: [0, -50, 300],
      state: [TREE_ALIVE, TREE_BURNING, TREE_WET],
    },
    agents: [
      { x: 10, y: 20, heading: 0.5, holding: true, crashed: false },
      { x: -400, y: 650, heading: 2.0, holding: false, crashed: true },
    ],
  };
}

function view(): FrameView {
  return {
    globalStep: 1234,
    episode: 7,
    interventionType: "auto",
    configName: "X",
    world: world(),
    tasks: [{ agent: 0, x: 100, y: -50 }],
    latestTrace: null,
  };
}

describe("renderFrame", () => {
  it("draws at least one visible frame", () => {
    const ctx = new RecordingContext();
    renderFrame(ctx, view(), 640);
    expect(ctx.calls.length).toBeGreaterThan(10);
    expect(ctx.calls.filter(([op]) => op === "fillRect").length)
      .toBeGreaterThanOrEqual(2 + 3); // water, island, three trees
  });

  it("is pure: identical frames produce identical call sequences", () => {
    const a = new RecordingContext();
    const b = new RecordingContext();
    renderFrame(a, view(), 640);
    renderFrame(b, view(), 640);
    expect(a.calls).toEqual(b.calls);
  });

  it("colors trees by state", () => {
    const ctx = new RecordingContext();
    renderFrame(ctx, view(), 640);
    const fills = ctx.calls
      .filter(([op]) => op === "fillStyle")
      .map(([, v]) => v);
    expect(fills).toContain(TREE_COLORS[TREE_BURNING]);
    expect(fills).toContain(TREE_COLORS[TREE_ALIVE]);
    expect(fills).toContain(TREE_COLORS[TREE_WET]);
  });

  it("marks a crashed agent with a cross, not a triangle", () => {
    const ctx = new RecordingContext();
    const v = view();
    v.world!.agents = [v.world!.agents[1]!]; // crashed one only
    v.tasks = [];
    renderFrame(ctx, v, 640);
    const closed = ctx.calls.filter(([op]) => op === "closePath");
    expect(closed.length).toBe(0);
    expect(ctx.calls.some(([op]) => op === "stroke")).toBe(true);
  });

  it("draws one target cross and leader line per task", () => {
    const ctx = new RecordingContext();
    const plain = new RecordingContext();
    const v = view();
    const noTasks = view();
    noTasks.tasks = [];
    renderFrame(ctx, v, 640);
    renderFrame(plain, noTasks, 640);
    const strokes = (c: RecordingContext) =>
      c.calls.filter(([op]) => op === "stroke").length;
    expect(strokes(ctx)).toBe(strokes(plain) + 2); // cross + leader line
  });

  it("shows the step readout", () => {
    const ctx = new RecordingContext();
    renderFrame(ctx, view(), 640);
    const texts = ctx.calls
      .filter(([op]) => op === "fillText")
      .map(([, t]) => String(t));
    expect(texts.some((t) => t.includes("step 1234"))).toBe(true);
    expect(texts.some((t) => t.includes("burning 1"))).toBe(true);
  });

  it("renders a waiting banner when no world exists yet", () => {
    const ctx = new RecordingContext();
    const v = view();
    v.world = null;
    renderFrame(ctx, v, 640);
    const texts = ctx.calls.filter(([op]) => op === "fillText");
    expect(texts.length).toBe(1);
  });
});

describe("legendEntries", () => {
  it("lists all five tree states with their colors", () => {
    const entries = legendEntries();
    expect(entries.length).toBe(5);
    expect(entries.map(([, label]) => label)).toEqual([
      "alive", "wet", "burning", "extinguished", "burned out",
    ]);
    for (const [color] of entries) {
      expect(color).toMatch(/^#[0-9a-f]{6}$/);
    }
  });
});
