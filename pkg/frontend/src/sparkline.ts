import type { EpisodeRecordDoc } from "./types.js";

/** The metrics the panel tracks, in display order. */
export const SPARKLINE_METRICS = [
  "episode_reward",
  "extinguishing_trees_reward",
  "crash_count",
] as const;

export interface SparklineSpec {
  metric: string;
  points: string;
  last: number | null;
}

/**
 * SVG polyline points for a series, left to right, linearly scaled into
 * a (width x height) box with `pad` pixels kept clear. A constant series
 * draws a mid-height line; an empty one draws nothing.
 */
export function sparklinePoints(values: number[], width: number,
                                height: number, pad = 1): string {
  if (values.length === 0) return "";
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  const innerW = width - 2 * pad;
  const innerH = height - 2 * pad;
  const n = values.length;
  const pts: string[] = [];
  for (let i = 0; i < n; i++) {
    const x = n === 1 ? pad + innerW / 2 : pad + (i / (n - 1)) * innerW;
    const t = hi === lo ? 0.5 : (values[i]! - lo) / (hi - lo);
    const y = pad + (1 - t) * innerH;
    pts.push(`${x},${y}`);
  }
  return pts.join(" ");
}

export function metricSeries(records: EpisodeRecordDoc[],
                             metric: string): number[] {
  return records.map((r) => r[metric] ?? 0);
}

export function buildSparklines(records: EpisodeRecordDoc[], width: number,
                                height: number): SparklineSpec[] {
  return SPARKLINE_METRICS.map((metric) => {
    const series = metricSeries(records, metric);
    return {
      metric,
      points: sparklinePoints(series, width, height),
      last: series.length ? series[series.length - 1]! : null,
    };
  });
}
