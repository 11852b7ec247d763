import {
  STATE_SCHEMA_VERSION,
  type FrameView,
  type StateDoc,
  type TaskDoc,
} from "./types.js";

/** Raised when a snapshot announces a schema we don't speak. */
export class SchemaError extends Error {}

function isRecord(v: unknown): v is Record<string, unknown> {
  return typeof v === "object" && v !== null && !Array.isArray(v);
}

/**
 * Validate a raw /state or /stream document and lift it into the view
 * model. Unknown schema versions are an error, not a guess: the map
 * would silently lie otherwise.
 */
export function decodeFrame(doc: unknown): FrameView {
  if (!isRecord(doc)) {
    throw new SchemaError("state document is not an object");
  }
  if (doc.schema !== STATE_SCHEMA_VERSION) {
    throw new SchemaError(
      `unknown state schema ${JSON.stringify(doc.schema)} ` +
        `(dashboard speaks ${STATE_SCHEMA_VERSION})`,
    );
  }
  const d = doc as unknown as StateDoc;
  const tasks: TaskDoc[] = [];
  if (d.mediation) {
    for (const t of d.mediation.tasks) {
      if (t !== null) tasks.push(t);
    }
  }
  return {
    globalStep: d.global_step,
    episode: d.episode,
    interventionType: d.intervention_type,
    configName: d.config_name,
    world: d.world ?? null,
    tasks,
    latestTrace: (d.latest_trace as Record<string, unknown>) ?? null,
  };
}

/**
 * Fixed affine world-to-screen map. World axes: +x east, +y north,
 * origin mid-island; screen y grows downward, so y flips.
 */
export class Projection {
  readonly scale: number;

  constructor(
    readonly halfExtent: number,
    readonly canvasSize: number,
    readonly pad = 10,
  ) {
    this.scale = (canvasSize - 2 * pad) / (2 * halfExtent);
  }

  toScreen(x: number, y: number): [number, number] {
    return [
      this.pad + (x + this.halfExtent) * this.scale,
      this.pad + (this.halfExtent - y) * this.scale,
    ];
  }

  /** World distance to pixels. */
  length(d: number): number {
    return d * this.scale;
  }
}

/** Wire task back to its grammar line, for echoing in the status chip. */
export function taskLine(t: TaskDoc): string {
  return `task(${t.agent}, ${t.x}, ${t.y})`;
}
