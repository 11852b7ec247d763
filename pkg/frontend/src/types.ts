/** Wire contract with the training server, plus the dashboard's view model.
 *
 * The server publishes versioned state snapshots; anything with a schema
 * number we don't know is surfaced as an error banner instead of being
 * guessed at.
 */

export const STATE_SCHEMA_VERSION = 1;

/** Tree life cycle codes as they appear in snapshot arrays. */
export const TREE_ALIVE = 0;
export const TREE_WET = 1;
export const TREE_BURNING = 2;
export const TREE_EXTINGUISHED = 3;
export const TREE_BURNED_OUT = 4;

export interface AgentDoc {
  x: number;
  y: number;
  heading: number;
  holding: boolean;
  crashed: boolean;
}

/** One "fly to (x, y)" directive, same shape the grammar serializes. */
export interface TaskDoc {
  agent: number;
  x: number;
  y: number;
}

export interface WorldDoc {
  step: number;
  terminal: boolean;
  burning: number;
  env_half_extent: number;
  island_half_extent: number;
  village_center: number[];
  village_radius: number;
  trees: { x: number[]; y: number[]; state: number[] };
  agents: AgentDoc[];
}

export interface MediationDoc {
  windows: number[];
  tasks: (TaskDoc | null)[];
  total_assigned: number;
  errors: number;
}

export interface StateDoc {
  schema: number;
  global_step: number;
  episode: number;
  update_idx: number;
  intervention_type: string;
  config_name: string;
  world?: WorldDoc;
  mediation?: MediationDoc;
  latest_trace?: Record<string, unknown>;
  last_episode?: Record<string, number>;
}

/** Episode records as served by /metrics (the fields the panel reads). */
export interface EpisodeRecordDoc {
  episode: number;
  episode_reward: number;
  extinguishing_trees_reward: number;
  crash_count: number;
  task_count: number;
  total_task_count: number;
  [key: string]: number;
}

export interface MetricsDoc {
  episodes: number;
  total_task_count: number;
  records: EpisodeRecordDoc[];
  interventions: { accepted: number; deferred: number };
}

export interface InterventionReply {
  status: "accepted" | "deferred" | "rejected" | "invalid";
  error?: string;
}

/** Decoded, render-ready snapshot. Rendering is pure given one of these. */
export interface FrameView {
  globalStep: number;
  episode: number;
  interventionType: string;
  configName: string;
  world: WorldDoc | null;
  tasks: TaskDoc[];
  latestTrace: Record<string, unknown> | null;
}
