#!/usr/bin/env python3
"""Sweep thread counts for fetch-and-add throughput across implementations.

For each p, runs the contended fetch-and-add bench once per implementation
(hardware baseline, flat funnels at each --m, optionally the recursive
funnel) and reports mean throughput and mean batch size per config, plus
the funnel/hardware speedup.  Optionally appends every rep as a CSV row
so the run can be rendered by the report tool.

Usage:
  python3 scripts/scaling_sweep.py --threads 1 2 4 8 --m 1 6 --duration 1.0
  python3 scripts/scaling_sweep.py --threads 8 --recursive --csv runs/faa.csv
"""

import argparse
import os
import sys

from aggfunnel.bench import (
    FAA_COLUMNS,
    FaaBenchConfig,
    append_csv,
    faa_rows,
    mean_std,
    run_faa_bench,
)


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, nargs="+", default=[1, 2, 4, 8])
    parser.add_argument("--m", type=int, nargs="+", default=[1, 6])
    parser.add_argument("--recursive", action="store_true",
                        help="also run the recursive funnel at each --m")
    parser.add_argument("--ratio", type=int, default=100)
    parser.add_argument("--work", type=float, default=0.0)
    parser.add_argument("--duration", type=float, default=1.0)
    parser.add_argument("--reps", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--csv", metavar="PATH",
                        help="append result rows to this CSV (header on create)")
    return parser.parse_args(argv)


def configs_for(p, args):
    common = dict(threads=p, ratio_pct=args.ratio,
                  work_mean_cycles=args.work, duration_s=args.duration,
                  reps=args.reps, seed=args.seed,
                  oversubscribe=p > (os.cpu_count() or 1))
    yield FaaBenchConfig(impl="hardware", **common)
    for m in args.m:
        yield FaaBenchConfig(impl="aggfunnel", m=m, **common)
        if args.recursive:
            yield FaaBenchConfig(impl="aggfunnel-recursive", m=m, **common)


def label(config):
    if config.impl == "hardware":
        return "hardware"
    short = "recursive" if config.impl.endswith("recursive") else "funnel"
    return f"{short} m={config.m}"


def main(argv=None) -> int:
    args = parse_args(argv)
    print(f"ratio={args.ratio} work={args.work:g} duration={args.duration:g}s "
          f"reps={args.reps} cpus={os.cpu_count()}")
    print(f"{'p':>4} {'config':<14} {'throughput':>14} {'stddev':>12} "
          f"{'avg batch':>10} {'vs hw':>7}")
    for p in args.threads:
        hardware = None
        for config in configs_for(p, args):
            results = run_faa_bench(config)
            if args.csv:
                append_csv(args.csv, FAA_COLUMNS, faa_rows(results))
            thr, dev = mean_std(r.throughput for r in results)
            batch, _ = mean_std(r.avg_batch for r in results)
            if config.impl == "hardware":
                hardware = thr
            speedup = thr / hardware if hardware else float("inf")
            print(f"{p:>4} {label(config):<14} {thr:>14,.0f} {dev:>12,.0f} "
                  f"{batch:>10.3f} {speedup:>7.2f}")
    if args.csv:
        print(f"rows appended to {args.csv}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
