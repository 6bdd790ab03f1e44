/**
 * Grouping and aggregation over parsed bench rows.
 *
 * Reps are collapsed to mean and sample standard deviation (n-1
 * denominator, 0 for a single rep — matching the bench harness's own
 * summary statistics).  Groups are keyed by the workload-defining
 * fields so different thread counts within one configuration line up
 * as points on one series.
 */

import type { FaaRow, QueueRow } from "./schema.js";

export interface Aggregate {
  mean: number;
  std: number;
  count: number;
}

export function aggregate(values: number[]): Aggregate {
  const count = values.length;
  if (count === 0) return { mean: 0, std: 0, count };
  const mean = values.reduce((a, b) => a + b, 0) / count;
  if (count === 1) return { mean: values[0]!, std: 0, count };
  const variance =
    values.reduce((a, b) => a + (b - mean) * (b - mean), 0) / (count - 1);
  return { mean, std: Math.sqrt(variance), count };
}

/** One configuration at one thread count, reps collapsed. */
export interface FaaPoint {
  config: string;
  impl: string;
  m: number;
  d: number;
  ratioPct: number;
  workCycles: number;
  threads: number;
  throughput: Aggregate;
  avgBatch: Aggregate;
  fairness: Aggregate;
  hpThroughput: Aggregate;
  lpThroughput: Aggregate;
}

export interface QueuePoint {
  config: string;
  idxImpl: string;
  m: number;
  pattern: string;
  initialSize: number;
  workCycles: number;
  threads: number;
  throughput: Aggregate;
}

export function faaConfigLabel(row: FaaRow): string {
  const name =
    row.impl === "hardware" ? "hardware" :
    row.impl === "aggfunnel" ? `funnel m=${row.m}` :
    `recursive m=${row.m}`;
  const direct = row.d > 0 ? ` d=${row.d}` : "";
  return `${name}${direct}`;
}

export function queueConfigLabel(row: QueueRow): string {
  const name =
    row.idxImpl === "hardware" ? "queue/hardware" :
    row.idxImpl === "aggfunnel" ? `queue/funnel m=${row.m}` :
    `queue/recursive m=${row.m}`;
  return `${name} ${row.pattern}`;
}

function sortedGroups<R>(
  rows: R[],
  key: (row: R) => string,
): Map<string, R[]> {
  const groups = new Map<string, R[]>();
  for (const row of rows) {
    const k = key(row);
    const bucket = groups.get(k);
    if (bucket) bucket.push(row);
    else groups.set(k, [row]);
  }
  // Code-unit comparison, not localeCompare: output order must not
  // depend on the host's locale.
  return new Map(
    [...groups.entries()].sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0)),
  );
}

export function faaPoints(rows: FaaRow[]): FaaPoint[] {
  const groups = sortedGroups(
    rows,
    (r) =>
      `${faaConfigLabel(r)}|ratio=${r.ratioPct}|work=${r.workCycles}` +
      `|threads=${String(r.threads).padStart(6, "0")}`,
  );
  const points: FaaPoint[] = [];
  for (const bucket of groups.values()) {
    const first = bucket[0]!;
    points.push({
      config: faaConfigLabel(first),
      impl: first.impl,
      m: first.m,
      d: first.d,
      ratioPct: first.ratioPct,
      workCycles: first.workCycles,
      threads: first.threads,
      throughput: aggregate(bucket.map((r) => r.throughput)),
      avgBatch: aggregate(bucket.map((r) => r.avgBatch)),
      fairness: aggregate(bucket.map((r) => r.fairness)),
      hpThroughput: aggregate(bucket.map((r) => r.hpThroughput)),
      lpThroughput: aggregate(bucket.map((r) => r.lpThroughput)),
    });
  }
  return points;
}

export function queuePoints(rows: QueueRow[]): QueuePoint[] {
  const groups = sortedGroups(
    rows,
    (r) =>
      `${queueConfigLabel(r)}|init=${r.initialSize}|work=${r.workCycles}` +
      `|threads=${String(r.threads).padStart(6, "0")}`,
  );
  const points: QueuePoint[] = [];
  for (const bucket of groups.values()) {
    const first = bucket[0]!;
    points.push({
      config: queueConfigLabel(first),
      idxImpl: first.idxImpl,
      m: first.m,
      pattern: first.pattern,
      initialSize: first.initialSize,
      workCycles: first.workCycles,
      threads: first.threads,
      throughput: aggregate(bucket.map((r) => r.throughput)),
    });
  }
  return points;
}

/** Points of one series (same config), ordered by thread count. */
export function seriesOf<P extends { config: string; threads: number }>(
  points: P[],
): Map<string, P[]> {
  const series = sortedGroups(points, (p) => p.config);
  for (const pts of series.values()) {
    pts.sort((a, b) => a.threads - b.threads);
  }
  return series;
}

export interface Comparison {
  config: string;
  /** Lowest thread count where this config's mean >= the baseline's, or null. */
  crossover: number | null;
  /** Largest mean ratio vs the baseline over shared thread counts. */
  maxSpeedup: number;
  /** Thread count where the max speedup occurs. */
  maxSpeedupThreads: number;
}

/**
 * Compare every non-baseline series against the baseline at shared
 * thread counts.  Series that share no thread count with the baseline
 * are omitted.
 */
export function compareToBaseline<
  P extends { config: string; threads: number; throughput: Aggregate },
>(points: P[], isBaseline: (p: P) => boolean): Comparison[] {
  const baseline = new Map<number, number>();
  for (const p of points) {
    if (isBaseline(p)) baseline.set(p.threads, p.throughput.mean);
  }
  const out: Comparison[] = [];
  for (const [config, pts] of seriesOf(points)) {
    if (pts.some(isBaseline)) continue;
    let crossover: number | null = null;
    let maxSpeedup = -Infinity;
    let maxSpeedupThreads = 0;
    for (const p of pts) {
      const base = baseline.get(p.threads);
      if (base === undefined || base <= 0) continue;
      const ratio = p.throughput.mean / base;
      if (ratio >= 1 && crossover === null) crossover = p.threads;
      if (ratio > maxSpeedup) {
        maxSpeedup = ratio;
        maxSpeedupThreads = p.threads;
      }
    }
    if (maxSpeedup === -Infinity) continue;
    out.push({ config, crossover, maxSpeedup, maxSpeedupThreads });
  }
  return out;
}
