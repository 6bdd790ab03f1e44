/**
 * Report assembly: parse + validate every input CSV, render the three
 * chart families (throughput scaling, average batch size, fairness and
 * priority ratio) and a markdown summary, then write everything in one
 * pass.  Nothing is written until every input has validated and every
 * artifact has rendered, so a schema error leaves the output directory
 * untouched.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { parseCsv, SchemaError } from "./schema.js";
import type { FaaRow, QueueRow } from "./schema.js";
import {
  aggregate,
  compareToBaseline,
  faaConfigLabel,
  faaPoints,
  queuePoints,
  seriesOf,
} from "./stats.js";
import type { Aggregate, FaaPoint, QueuePoint } from "./stats.js";
import { renderChart } from "./svg.js";
import type { Series } from "./svg.js";

export { SchemaError };

export const CHART_FILES = ["throughput.svg", "batch.svg", "fairness.svg"] as const;
export const SUMMARY_FILE = "summary.md";

interface Inputs {
  faaRows: FaaRow[];
  queueRows: QueueRow[];
  /** path -> [kind, row count], in the order given. */
  manifest: [string, string, number][];
}

function readInputs(csvPaths: string[]): Inputs {
  const inputs: Inputs = { faaRows: [], queueRows: [], manifest: [] };
  for (const csvPath of csvPaths) {
    let text: string;
    try {
      text = fs.readFileSync(csvPath, "utf8");
    } catch {
      throw new SchemaError(csvPath, 1, "cannot read file");
    }
    const parsed = parseCsv(csvPath, text);
    if (parsed.kind === "faa") {
      inputs.faaRows.push(...parsed.rows);
      inputs.manifest.push([csvPath, "fetch-add", parsed.rows.length]);
    } else {
      inputs.queueRows.push(...parsed.rows);
      inputs.manifest.push([csvPath, "queue", parsed.rows.length]);
    }
  }
  return inputs;
}

// ------------------------------------------------------------------ labels

function faaWorkloadKey(p: { ratioPct: number; workCycles: number }): string {
  return `ratio=${p.ratioPct} work=${p.workCycles}`;
}

function queueWorkloadKey(p: {
  initialSize: number;
  workCycles: number;
}): string {
  return `init=${p.initialSize} work=${p.workCycles}`;
}

/** Label series; include the workload only when several are present. */
function seriesLabel(config: string, workload: string, many: boolean): string {
  return many ? `${config} (${workload})` : config;
}

// ------------------------------------------------------------------ charts

function faaSeries(
  points: FaaPoint[],
  metric: (p: FaaPoint) => Aggregate,
): Series[] {
  const workloads = new Set(points.map(faaWorkloadKey));
  const many = workloads.size > 1;
  const labeled = points.map((p) => ({
    ...p,
    config: seriesLabel(p.config, faaWorkloadKey(p), many),
  }));
  return [...seriesOf(labeled).entries()].map(([label, pts]) => ({
    label,
    points: pts.map((p) => {
      const agg = metric(p);
      return { x: p.threads, y: agg.mean, err: agg.std };
    }),
  }));
}

function queueSeries(points: QueuePoint[]): Series[] {
  const workloads = new Set(points.map(queueWorkloadKey));
  const many = workloads.size > 1;
  const labeled = points.map((p) => ({
    ...p,
    config: seriesLabel(p.config, queueWorkloadKey(p), many),
  }));
  return [...seriesOf(labeled).entries()].map(([label, pts]) => ({
    label,
    points: pts.map((p) => ({
      x: p.threads,
      y: p.throughput.mean,
      err: p.throughput.std,
    })),
  }));
}

/** Per-rep priority ratio series for configurations with direct threads. */
function prioritySeries(rows: FaaRow[]): Series[] {
  const direct = rows.filter((r) => r.d > 0 && r.threads > r.d);
  if (direct.length === 0) return [];
  const groups = new Map<string, FaaRow[]>();
  for (const row of direct) {
    const key = `${faaConfigLabel(row)} (${faaWorkloadKey(row)})` +
      `|${String(row.threads).padStart(6, "0")}`;
    const bucket = groups.get(key);
    if (bucket) bucket.push(row);
    else groups.set(key, [row]);
  }
  const byConfig = new Map<string, { x: number; y: number; err: number }[]>();
  for (const key of [...groups.keys()].sort()) {
    const bucket = groups.get(key)!;
    const first = bucket[0]!;
    const label = `hp/lp ${faaConfigLabel(first)}`;
    const ratios = bucket.map((r) => {
      const hpPerThread = r.hpThroughput / r.d;
      const lpPerThread = r.lpThroughput / (r.threads - r.d);
      return lpPerThread > 0 ? hpPerThread / lpPerThread : 0;
    });
    const agg = aggregate(ratios);
    const points = byConfig.get(label) ?? [];
    points.push({ x: first.threads, y: agg.mean, err: agg.std });
    byConfig.set(label, points);
  }
  return [...byConfig.entries()].map(([label, points]) => ({ label, points }));
}

/** Stack complete SVG documents vertically into one SVG file. */
function stackCharts(charts: string[]): string {
  if (charts.length === 1) return charts[0]!;
  const sized = charts.map((chart) => {
    const match = /<svg [^>]*width="(\d+)" height="(\d+)"/.exec(chart);
    if (!match) throw new Error("unsized chart");
    return { chart, width: Number(match[1]), height: Number(match[2]) };
  });
  const width = Math.max(...sized.map((c) => c.width));
  const height = sized.reduce((a, c) => a + c.height, 0);
  const parts = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
      `height="${height}" viewBox="0 0 ${width} ${height}">`,
  ];
  let y = 0;
  for (const c of sized) {
    parts.push(c.chart.replace("<svg ", `<svg y="${y}" `));
    y += c.height;
  }
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

function renderThroughputChart(inputs: Inputs): string {
  const faa = faaSeries(faaPoints(inputs.faaRows), (p) => p.throughput);
  const queue = queueSeries(queuePoints(inputs.queueRows));
  const charts: string[] = [];
  if (faa.length > 0 || queue.length === 0) {
    charts.push(
      renderChart(faa, {
        title: "Fetch-and-add throughput",
        xLabel: "threads",
        yLabel: "ops/s",
      }),
    );
  }
  if (queue.length > 0) {
    charts.push(
      renderChart(queue, {
        title: "Queue throughput",
        xLabel: "threads",
        yLabel: "ops/s",
      }),
    );
  }
  return stackCharts(charts);
}

function renderBatchChart(inputs: Inputs): string {
  const points = faaPoints(inputs.faaRows).filter((p) => p.impl !== "hardware");
  return renderChart(faaSeries(points, (p) => p.avgBatch), {
    title: "Average batch size",
    xLabel: "threads",
    yLabel: "ops per batch",
  });
}

function renderFairnessChart(inputs: Inputs): string {
  const fairness = renderChart(
    faaSeries(faaPoints(inputs.faaRows), (p) => p.fairness),
    {
      title: "Fairness (Jain index)",
      xLabel: "threads",
      yLabel: "fairness",
    },
  );
  const priority = prioritySeries(inputs.faaRows);
  if (priority.length === 0) return fairness;
  return stackCharts([
    fairness,
    renderChart(priority, {
      title: "Priority ratio (per-thread hp / lp)",
      xLabel: "threads",
      yLabel: "hp / lp",
    }),
  ]);
}

// ----------------------------------------------------------------- summary

function groupDigits(value: number): string {
  return Math.round(value)
    .toString()
    .replace(/\B(?=(\d{3})+(?!\d))/g, ",");
}

function meanStd(agg: Aggregate, digits = 0): string {
  if (digits === 0) {
    return `${groupDigits(agg.mean)} ± ${groupDigits(agg.std)}`;
  }
  return `${agg.mean.toFixed(digits)} ± ${agg.std.toFixed(digits)}`;
}

function partition<P>(points: P[], key: (p: P) => string): Map<string, P[]> {
  const out = new Map<string, P[]>();
  for (const p of points) {
    const k = key(p);
    const bucket = out.get(k);
    if (bucket) bucket.push(p);
    else out.set(k, [p]);
  }
  return new Map(
    [...out.entries()].sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0)),
  );
}

function renderSummary(inputs: Inputs): string {
  const lines: string[] = ["# Bench report", ""];

  lines.push("## Inputs", "");
  for (const [file, kind, count] of inputs.manifest) {
    lines.push(`- \`${path.basename(file)}\` — ${count} ${kind} rows`);
  }
  lines.push("");

  const faa = faaPoints(inputs.faaRows);
  if (faa.length > 0) {
    lines.push("## Fetch-and-add", "");
    lines.push(
      "| config | workload | threads | throughput (ops/s) | avg batch | fairness |",
      "|---|---|---:|---:|---:|---:|",
    );
    for (const p of faa) {
      lines.push(
        `| ${p.config} | ${faaWorkloadKey(p)} | ${p.threads} ` +
          `| ${meanStd(p.throughput)} | ${meanStd(p.avgBatch, 3)} ` +
          `| ${meanStd(p.fairness, 3)} |`,
      );
    }
    lines.push("");

    for (const [workload, points] of partition(faa, faaWorkloadKey)) {
      const comparisons = compareToBaseline(
        points,
        (p) => p.impl === "hardware" && p.d === 0,
      );
      if (comparisons.length === 0) continue;
      lines.push(`### Speedup vs hardware (${workload})`, "");
      lines.push(
        "| config | crossover threads | max speedup | at threads |",
        "|---|---:|---:|---:|",
      );
      for (const c of comparisons) {
        lines.push(
          `| ${c.config} | ${c.crossover ?? "none"} ` +
            `| ${c.maxSpeedup.toFixed(2)}x | ${c.maxSpeedupThreads} |`,
        );
      }
      lines.push("");
    }

    const priority = prioritySeries(inputs.faaRows);
    if (priority.length > 0) {
      lines.push("### Priority ratio (per-thread hp / lp)", "");
      lines.push("| config | threads | hp/lp |", "|---|---:|---:|");
      for (const s of priority) {
        for (const p of s.points) {
          lines.push(
            `| ${s.label.replace(/^hp\/lp /, "")} | ${p.x} ` +
              `| ${p.y.toFixed(2)} ± ${p.err.toFixed(2)} |`,
          );
        }
      }
      lines.push("");
    }
  }

  const queue = queuePoints(inputs.queueRows);
  if (queue.length > 0) {
    lines.push("## Queue", "");
    lines.push(
      "| config | workload | threads | throughput (ops/s) |",
      "|---|---|---:|---:|",
    );
    for (const p of queue) {
      lines.push(
        `| ${p.config} | ${queueWorkloadKey(p)} | ${p.threads} ` +
          `| ${meanStd(p.throughput)} |`,
      );
    }
    lines.push("");

    for (const [workload, points] of partition(queue, queueWorkloadKey)) {
      const comparisons = compareToBaseline(
        points,
        (p) => p.idxImpl === "hardware",
      );
      if (comparisons.length === 0) continue;
      lines.push(`### Queue index speedup vs hardware (${workload})`, "");
      lines.push(
        "| config | crossover threads | max speedup | at threads |",
        "|---|---:|---:|---:|",
      );
      for (const c of comparisons) {
        lines.push(
          `| ${c.config} | ${c.crossover ?? "none"} ` +
            `| ${c.maxSpeedup.toFixed(2)}x | ${c.maxSpeedupThreads} |`,
        );
      }
      lines.push("");
    }
  }

  return lines.join("\n") + "\n";
}

// ------------------------------------------------------------------- entry

/**
 * Render every artifact from the given CSVs into `outDir`.  Returns the
 * written file paths.  Throws SchemaError (inputs invalid) before any
 * file is written.
 */
export function renderReport(csvPaths: string[], outDir: string): string[] {
  if (csvPaths.length === 0) {
    throw new SchemaError("(none)", 1, "no input CSVs given");
  }
  const inputs = readInputs(csvPaths);

  const artifacts = new Map<string, string>([
    ["throughput.svg", renderThroughputChart(inputs)],
    ["batch.svg", renderBatchChart(inputs)],
    ["fairness.svg", renderFairnessChart(inputs)],
    [SUMMARY_FILE, renderSummary(inputs)],
  ]);

  fs.mkdirSync(outDir, { recursive: true });
  const written: string[] = [];
  for (const [name, content] of artifacts) {
    const target = path.join(outDir, name);
    fs.writeFileSync(target, content, "utf8");
    written.push(target);
  }
  return written;
}
