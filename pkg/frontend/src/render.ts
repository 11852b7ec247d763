import { Projection } from "./transform.js";
import {
  TREE_ALIVE,
  TREE_BURNED_OUT,
  TREE_BURNING,
  TREE_EXTINGUISHED,
  TREE_WET,
  type AgentDoc,
  type FrameView,
  type TaskDoc,
} from "./types.js";

/**
 * The slice of CanvasRenderingContext2D the renderer touches. Tests pass
 * a recording stub; the browser passes the real context.
 */
export interface Draw2D {
  fillStyle: string;
  strokeStyle: string;
  lineWidth: number;
  font: string;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  closePath(): void;
  fill(): void;
  stroke(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
}

export const TREE_COLORS: Record<number, string> = {
  [TREE_ALIVE]: "#2e7d32",
  [TREE_WET]: "#4fc3f7",
  [TREE_BURNING]: "#e64a19",
  [TREE_EXTINGUISHED]: "#8d6e63",
  [TREE_BURNED_OUT]: "#37474f",
};

export const TREE_LABELS: Record<number, string> = {
  [TREE_ALIVE]: "alive",
  [TREE_WET]: "wet",
  [TREE_BURNING]: "burning",
  [TREE_EXTINGUISHED]: "extinguished",
  [TREE_BURNED_OUT]: "burned out",
};

const WATER = "#1a4a6b";
const ISLAND = "#c8b87a";
const VILLAGE = "#7b1fa2";
const AGENT = "#fdd835";
const AGENT_CRASHED = "#d32f2f";
const TASK = "#ffffff";
const TEXT = "#e0e0e0";

const TREE_PX = 4;
const AGENT_PX = 7;

function drawAgent(ctx: Draw2D, proj: Projection, a: AgentDoc): void {
  const [px, py] = proj.toScreen(a.x, a.y);
  if (a.crashed) {
    ctx.strokeStyle = AGENT_CRASHED;
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(px - AGENT_PX, py - AGENT_PX);
    ctx.lineTo(px + AGENT_PX, py + AGENT_PX);
    ctx.moveTo(px - AGENT_PX, py + AGENT_PX);
    ctx.lineTo(px + AGENT_PX, py - AGENT_PX);
    ctx.stroke();
    return;
  }
  // triangle nose along heading; screen y is flipped so sin() negates
  const c = Math.cos(a.heading);
  const s = Math.sin(a.heading);
  const nose: [number, number] = [px + AGENT_PX * c, py - AGENT_PX * s];
  const left: [number, number] = [
    px + AGENT_PX * 0.7 * Math.cos(a.heading + 2.5),
    py - AGENT_PX * 0.7 * Math.sin(a.heading + 2.5),
  ];
  const right: [number, number] = [
    px + AGENT_PX * 0.7 * Math.cos(a.heading - 2.5),
    py - AGENT_PX * 0.7 * Math.sin(a.heading - 2.5),
  ];
  ctx.fillStyle = AGENT;
  ctx.beginPath();
  ctx.moveTo(nose[0], nose[1]);
  ctx.lineTo(left[0], left[1]);
  ctx.lineTo(right[0], right[1]);
  ctx.closePath();
  ctx.fill();
  if (a.holding) {
    ctx.fillStyle = TREE_COLORS[TREE_WET]!;
    ctx.beginPath();
    ctx.arc(px, py, 2, 0, Math.PI * 2);
    ctx.fill();
  }
}

function drawTask(ctx: Draw2D, proj: Projection, t: TaskDoc,
                  agents: AgentDoc[]): void {
  const [tx, ty] = proj.toScreen(t.x, t.y);
  ctx.strokeStyle = TASK;
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(tx - 5, ty);
  ctx.lineTo(tx + 5, ty);
  ctx.moveTo(tx, ty - 5);
  ctx.lineTo(tx, ty + 5);
  ctx.stroke();
  const a = agents[t.agent];
  if (a && !a.crashed) {
    const [ax, ay] = proj.toScreen(a.x, a.y);
    ctx.beginPath();
    ctx.moveTo(ax, ay);
    ctx.lineTo(tx, ty);
    ctx.stroke();
  }
}

/**
 * Draw one frame. Pure: same view and projection produce the same call
 * sequence, which is exactly what the tests record and compare.
 */
export function renderFrame(ctx: Draw2D, view: FrameView,
                            canvasSize: number): void {
  ctx.clearRect(0, 0, canvasSize, canvasSize);
  ctx.fillStyle = WATER;
  ctx.fillRect(0, 0, canvasSize, canvasSize);

  const w = view.world;
  if (w === null) {
    ctx.fillStyle = TEXT;
    ctx.font = "14px monospace";
    ctx.fillText("waiting for first episode...", 16, 24);
    return;
  }
  const proj = new Projection(w.env_half_extent, canvasSize);

  // island is the max-norm square of half extent ih; water is the band
  // between it and the map edge
  const [ix, iy] = proj.toScreen(-w.island_half_extent, w.island_half_extent);
  const side = proj.length(2 * w.island_half_extent);
  ctx.fillStyle = ISLAND;
  ctx.fillRect(ix, iy, side, side);

  const vc = w.village_center;
  const [vx, vy] = proj.toScreen(vc[0] ?? 0, vc[1] ?? 0);
  ctx.strokeStyle = VILLAGE;
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.arc(vx, vy, proj.length(w.village_radius), 0, Math.PI * 2);
  ctx.stroke();

  const { x, y, state } = w.trees;
  for (let i = 0; i < x.length; i++) {
    const [px, py] = proj.toScreen(x[i]!, y[i]!);
    ctx.fillStyle = TREE_COLORS[state[i]!] ?? "#ff00ff";
    ctx.fillRect(px - TREE_PX / 2, py - TREE_PX / 2, TREE_PX, TREE_PX);
  }

  for (const t of view.tasks) {
    drawTask(ctx, proj, t, w.agents);
  }
  for (const a of w.agents) {
    drawAgent(ctx, proj, a);
  }

  ctx.fillStyle = TEXT;
  ctx.font = "12px monospace";
  ctx.fillText(
    `step ${view.globalStep}  episode ${view.episode}  ` +
      `burning ${w.burning}  mode ${view.interventionType}`,
    16,
    canvasSize - 10,
  );
}

/** Legend rows as (color, label) pairs, in tree-code order. */
export function legendEntries(): Array<[string, string]> {
  return [TREE_ALIVE, TREE_WET, TREE_BURNING, TREE_EXTINGUISHED,
          TREE_BURNED_OUT].map((s) => [TREE_COLORS[s]!, TREE_LABELS[s]!]);
}
