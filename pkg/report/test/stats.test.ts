import * as fs from "node:fs";
import * as path from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { parseCsv } from "../src/schema.js";
import type { FaaRow } from "../src/schema.js";
import {
  aggregate,
  compareToBaseline,
  faaConfigLabel,
  faaPoints,
  queueConfigLabel,
  queuePoints,
  seriesOf,
} from "../src/stats.js";

const FIXTURES = fileURLToPath(new URL("fixtures", import.meta.url));

function faaRows(name: string): FaaRow[] {
  const parsed = parseCsv(name, fs.readFileSync(path.join(FIXTURES, name), "utf8"));
  if (parsed.kind !== "faa") throw new Error("expected faa fixture");
  return parsed.rows;
}

describe("aggregate", () => {
  it("matches the hand-computed sample standard deviation", () => {
    // mean (1000+1200)/2 = 1100; sample variance (100^2 + 100^2)/1 = 20000.
    const agg = aggregate([1000, 1200]);
    expect(agg.mean).toBe(1100);
    expect(agg.std).toBeCloseTo(Math.sqrt(20000), 10);
    expect(agg.count).toBe(2);
  });

  it("gives a singleton zero deviation", () => {
    expect(aggregate([42])).toEqual({ mean: 42, std: 0, count: 1 });
  });

  it("handles empty input", () => {
    expect(aggregate([])).toEqual({ mean: 0, std: 0, count: 0 });
  });

  it("is exact on a three-value golden", () => {
    // mean 2; sample variance ((1)^2 + 0 + (1)^2)/2 = 1.
    const agg = aggregate([1, 2, 3]);
    expect(agg.mean).toBe(2);
    expect(agg.std).toBe(1);
  });
});

describe("labels", () => {
  const base = {
    m: 6, d: 0, threads: 8, ratioPct: 100, workCycles: 0, rep: 0,
    durationS: 0.1, totalOps: 1, throughput: 1, avgBatch: 1, fairness: 1,
    hpThroughput: 0, lpThroughput: 1,
  };

  it("names the implementations", () => {
    expect(faaConfigLabel({ ...base, impl: "hardware" })).toBe("hardware");
    expect(faaConfigLabel({ ...base, impl: "aggfunnel" })).toBe("funnel m=6");
    expect(faaConfigLabel({ ...base, impl: "aggfunnel-recursive", m: 4 }))
      .toBe("recursive m=4");
    expect(faaConfigLabel({ ...base, impl: "aggfunnel", d: 1 }))
      .toBe("funnel m=6 d=1");
  });

  it("names queue configurations", () => {
    expect(
      queueConfigLabel({
        queueImpl: "segqueue", idxImpl: "aggfunnel", m: 6, threads: 8,
        pattern: "pairs", initialSize: 0, workCycles: 0, rep: 0,
        durationS: 0.1, totalOps: 1, throughput: 1,
      }),
    ).toBe("queue/funnel m=6 pairs");
  });
});

describe("faaPoints", () => {
  it("collapses reps per (config, threads)", () => {
    const points = faaPoints(faaRows("faa_fixture.csv"));
    expect(points).toHaveLength(6);
    const funnel8 = points.find(
      (p) => p.config === "funnel m=6" && p.threads === 8,
    )!;
    expect(funnel8.throughput.mean).toBe(2600);
    expect(funnel8.throughput.count).toBe(2);
    expect(funnel8.avgBatch.mean).toBeCloseTo(3.2, 12);
    const hardware2 = points.find(
      (p) => p.config === "hardware" && p.threads === 2,
    )!;
    expect(hardware2.throughput.mean).toBe(1100);
  });

  it("orders series points by thread count", () => {
    const series = seriesOf(faaPoints(faaRows("faa_fixture.csv")));
    expect([...series.keys()]).toEqual(["funnel m=6", "hardware"]);
    expect(series.get("funnel m=6")!.map((p) => p.threads)).toEqual([2, 4, 8]);
  });
});

describe("compareToBaseline", () => {
  it("finds the crossover and max speedup from the fixture", () => {
    // funnel means 800/1300/2600 vs hardware means 1100/1250/1300:
    // ratios 0.727, 1.04, 2.0 -> crossover at 4 threads, max 2.0x at 8.
    const points = faaPoints(faaRows("faa_fixture.csv"));
    const comparisons = compareToBaseline(
      points, (p) => p.impl === "hardware" && p.d === 0,
    );
    expect(comparisons).toHaveLength(1);
    const funnel = comparisons[0]!;
    expect(funnel.config).toBe("funnel m=6");
    expect(funnel.crossover).toBe(4);
    expect(funnel.maxSpeedup).toBeCloseTo(2.0, 12);
    expect(funnel.maxSpeedupThreads).toBe(8);
  });

  it("reports no crossover when the baseline always wins", () => {
    const rows = faaRows("faa_fixture.csv").map((r) =>
      r.impl === "aggfunnel" ? { ...r, throughput: r.throughput / 10 } : r,
    );
    const comparisons = compareToBaseline(
      faaPoints(rows), (p) => p.impl === "hardware" && p.d === 0,
    );
    expect(comparisons[0]!.crossover).toBeNull();
    expect(comparisons[0]!.maxSpeedup).toBeLessThan(1);
  });

  it("compares queue indices", () => {
    const parsed = parseCsv(
      "queue_fixture.csv",
      fs.readFileSync(path.join(FIXTURES, "queue_fixture.csv"), "utf8"),
    );
    if (parsed.kind !== "queue") throw new Error("expected queue fixture");
    const comparisons = compareToBaseline(
      queuePoints(parsed.rows), (p) => p.idxImpl === "hardware",
    );
    expect(comparisons).toHaveLength(1);
    // funnel 1600/2700 vs hardware 2100/2500 -> crossover 8, max 1.08x.
    expect(comparisons[0]!.crossover).toBe(8);
    expect(comparisons[0]!.maxSpeedup).toBeCloseTo(2700 / 2500, 12);
  });
});
