#!/usr/bin/env python3
"""Sweep thread counts for segment-queue throughput across index choices.

For each p, runs the queue bench with hardware-indexed and funnel-indexed
head/tail counters and reports mean throughput per config plus the
funnel/hardware ratio — the quantity the integration experiment is judged
on.  Optionally appends every rep as a CSV row for the report tool.

Usage:
  python3 scripts/queue_sweep.py --threads 2 4 8 --pattern pairs
  python3 scripts/queue_sweep.py --threads 8 --m 1 6 --csv runs/queue.csv
"""

import argparse
import os
import sys

from aggfunnel.bench import (
    QUEUE_COLUMNS,
    QueueBenchConfig,
    append_csv,
    mean_std,
    queue_rows,
    run_queue_bench,
)


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, nargs="+", default=[2, 4, 8])
    parser.add_argument("--m", type=int, nargs="+", default=[6])
    parser.add_argument("--pattern", choices=("pairs", "enq4deq4"), default="pairs")
    parser.add_argument("--initial-size", type=int, default=0)
    parser.add_argument("--work", type=float, default=0.0)
    parser.add_argument("--duration", type=float, default=1.0)
    parser.add_argument("--reps", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--csv", metavar="PATH",
                        help="append result rows to this CSV (header on create)")
    return parser.parse_args(argv)


def configs_for(p, args):
    common = dict(threads=p, pattern=args.pattern,
                  initial_size=args.initial_size,
                  work_mean_cycles=args.work, duration_s=args.duration,
                  reps=args.reps, seed=args.seed,
                  oversubscribe=p > (os.cpu_count() or 1))
    yield "hardware", QueueBenchConfig(idx_impl="hardware", **common)
    for m in args.m:
        yield f"funnel m={m}", QueueBenchConfig(idx_impl="aggfunnel", m=m, **common)


def main(argv=None) -> int:
    args = parse_args(argv)
    print(f"pattern={args.pattern} initial={args.initial_size} "
          f"work={args.work:g} duration={args.duration:g}s reps={args.reps} "
          f"cpus={os.cpu_count()}")
    print(f"{'p':>4} {'index':<12} {'throughput':>14} {'stddev':>12} {'vs hw':>7}")
    for p in args.threads:
        hardware = None
        for name, config in configs_for(p, args):
            results = run_queue_bench(config)
            if args.csv:
                append_csv(args.csv, QUEUE_COLUMNS, queue_rows(results))
            thr, dev = mean_std(r.throughput for r in results)
            if name == "hardware":
                hardware = thr
            ratio = thr / hardware if hardware else float("inf")
            print(f"{p:>4} {name:<12} {thr:>14,.0f} {dev:>12,.0f} {ratio:>7.2f}")
    if args.csv:
        print(f"rows appended to {args.csv}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
