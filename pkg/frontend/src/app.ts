import type { DashboardClient } from "./client.js";
import { renderFrame, type Draw2D } from "./render.js";
import { decodeFrame, SchemaError, taskLine } from "./transform.js";
import { buildSparklines, type SparklineSpec } from "./sparkline.js";
import type { FrameView, InterventionReply } from "./types.js";

export interface BannerState {
  kind: "none" | "error" | "reconnecting";
  text: string;
}

export interface ChipState {
  status: "idle" | "invalid" | "accepted" | "deferred" | "rejected";
  detail: string;
}

/**
 * Everything the controller needs from the page. main.ts binds these to
 * real DOM nodes; tests bind them to plain records.
 */
export interface AppSurface {
  ctx: Draw2D;
  canvasSize: number;
  setBanner(state: BannerState): void;
  setChip(state: ChipState): void;
  setSparklines(specs: SparklineSpec[]): void;
}

/**
 * View-model glue: frames in, pixels and status text out. Holds no
 * simulation state; the only write path to the server is
 * `submitIntervention`.
 */
export class App {
  framesRendered = 0;
  lastView: FrameView | null = null;

  constructor(
    private readonly surface: AppSurface,
    private readonly client: DashboardClient,
    private readonly sparkWidth = 120,
    private readonly sparkHeight = 28,
  ) {}

  /** Decode and draw one raw snapshot from /state or /stream. */
  handleFrame(doc: unknown): void {
    let view: FrameView;
    try {
      view = decodeFrame(doc);
    } catch (err) {
      if (err instanceof SchemaError) {
        this.surface.setBanner({ kind: "error", text: err.message });
        return;
      }
      throw err;
    }
    this.lastView = view;
    renderFrame(this.surface.ctx, view, this.surface.canvasSize);
    this.framesRendered += 1;
    this.surface.setBanner({ kind: "none", text: "" });
  }

  streamStatus(status: string): void {
    if (status === "reconnecting") {
      this.surface.setBanner({ kind: "reconnecting",
                               text: "stream lost; reconnecting" });
    }
  }

  async refreshMetrics(): Promise<void> {
    const doc = await this.client.metrics();
    this.surface.setSparklines(
      buildSparklines(doc.records, this.sparkWidth, this.sparkHeight));
  }

  /**
   * Send strategy text. On acceptance the chip echoes the task list the
   * mediator produced, once the next snapshot shows it.
   */
  async submit(text: string): Promise<InterventionReply> {
    const reply = await this.client.submitIntervention(text);
    if (reply.status !== "accepted") {
      this.surface.setChip({ status: reply.status,
                             detail: reply.error ?? "" });
      return reply;
    }
    const state = await this.client.state();
    let detail = "queued for the next scheduling point";
    if (state !== null && state.mediation) {
      const lines = state.mediation.tasks
        .filter((t): t is NonNullable<typeof t> => t !== null)
        .map(taskLine);
      if (lines.length > 0) detail = lines.join("  ");
    }
    this.surface.setChip({ status: "accepted", detail });
    return reply;
  }
}
