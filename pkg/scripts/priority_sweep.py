#!/usr/bin/env python3
"""Sweep thread counts for the priority experiment (d=1 vs d=0 baseline).

For each p, runs the contended fetch-and-add bench twice — all threads
funneled (d=0), then one high-priority thread bypassing straight to Main
(d=1) — and reports the two quantities the experiment is judged on:

  * hp/lp: the bypass thread's throughput over the average funneled
    thread's throughput (d=1 run),
  * total ratio: d=1 total throughput over d=0 total throughput.

Usage:
  python3 scripts/priority_sweep.py --threads 8 16 24 32 --duration 1.0 --reps 3
"""

import argparse
import os
import sys

from aggfunnel.bench import FaaBenchConfig, mean_std, run_faa_bench


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, nargs="+", default=[8, 16, 24, 32])
    parser.add_argument("--m", type=int, default=6)
    parser.add_argument("--duration", type=float, default=1.0)
    parser.add_argument("--reps", type=int, default=3)
    parser.add_argument("--work", type=float, default=0.0)
    parser.add_argument("--ratio", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    return parser.parse_args(argv)


def run_pair(p, args):
    common = dict(m=args.m, threads=p, ratio_pct=args.ratio,
                  work_mean_cycles=args.work, duration_s=args.duration,
                  reps=args.reps, seed=args.seed,
                  oversubscribe=p > (os.cpu_count() or 1))
    base = run_faa_bench(FaaBenchConfig(direct_threads=0, **common))
    prio = run_faa_bench(FaaBenchConfig(direct_threads=1, **common))
    return base, prio


def main(argv=None) -> int:
    args = parse_args(argv)
    print(f"m={args.m} ratio={args.ratio} work={args.work:g} "
          f"duration={args.duration:g}s reps={args.reps} cpus={os.cpu_count()}")
    print(f"{'p':>4} {'d0 total':>12} {'d1 total':>12} {'total ratio':>11} "
          f"{'hp/thread':>12} {'lp/thread':>12} {'hp/lp':>7}")
    for p in args.threads:
        base, prio = run_pair(p, args)
        d0_total, _ = mean_std(r.throughput for r in base)
        d1_total, _ = mean_std(r.throughput for r in prio)
        hp, _ = mean_std(r.hp_throughput for r in prio)
        lp_avg, _ = mean_std(r.lp_throughput / (p - 1) for r in prio)
        total_ratio = d1_total / d0_total if d0_total else float("inf")
        hp_lp = hp / lp_avg if lp_avg else float("inf")
        print(f"{p:>4} {d0_total:>12,.0f} {d1_total:>12,.0f} {total_ratio:>11.3f} "
              f"{hp:>12,.0f} {lp_avg:>12,.0f} {hp_lp:>7.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
