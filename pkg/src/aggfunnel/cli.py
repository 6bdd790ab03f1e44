"""``bench`` command line: timed benchmarks and linearizability stress.

Exit codes: 0 on success, 1 on configuration errors (bad flags/values), 2 on
correctness failures (checker rejections, conservation violations, canary
hits).
"""

from __future__ import annotations

import argparse
import sys

from .bench import (
    FAA_COLUMNS,
    QUEUE_COLUMNS,
    FaaBenchConfig,
    LincheckConfig,
    QueueBenchConfig,
    append_csv,
    faa_rows,
    mean_std,
    queue_rows,
    run_faa_bench,
    run_lincheck_stress,
    run_queue_bench,
)
from .core import CorrectnessError, InvalidConfig

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bench",
        description="Benchmark fetch-and-add objects and the segment queue, "
                    "or stress-check small histories for linearizability.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, default_m: int = 6) -> None:
        p.add_argument("--impl", default="aggfunnel",
                       choices=["hardware", "aggfunnel", "aggfunnel-recursive"],
                       help="fetch-and-add implementation under test")
        p.add_argument("--m", type=int, default=default_m,
                       help="aggregators per sign (recursive: inner level size)")
        p.add_argument("--threads", type=int, default=8, help="worker threads")
        p.add_argument("--seed", type=int, default=0, help="workload seed")
        p.add_argument("--csv", metavar="PATH", default=None,
                       help="append result rows to this CSV (header on create)")
        p.add_argument("--no-trim", action="store_true",
                       help="disable batch-chain trimming (leak mode)")
        p.add_argument("--pin", default="none", choices=["none", "rr"],
                       help="thread-to-CPU pinning policy")
        p.add_argument("--oversubscribe", action="store_true",
                       help="allow more threads than hardware threads")
        p.add_argument("--switch-interval", type=float, default=1e-5,
                       dest="switch_interval",
                       help="interpreter thread switch interval during runs")

    faa = sub.add_parser("faa", help="fetch-and-add throughput bench")
    common(faa)
    faa.add_argument("--direct", type=int, default=0,
                     help="thread ids below this bypass aggregators")
    faa.add_argument("--ratio", type=int, default=90,
                     help="percent of ops that are fetch-and-adds (rest read)")
    faa.add_argument("--work", type=float, default=512.0,
                     help="geometric mean local work between ops, cycles")
    faa.add_argument("--duration", type=float, default=2.0, help="seconds per rep")
    faa.add_argument("--reps", type=int, default=5, help="repetitions")
    faa.add_argument("--mixed-sign", action="store_true",
                     help="draw deltas with random sign")
    faa.add_argument("--debug", action="store_true",
                     help="arm publication-point invariant checks")
    faa.set_defaults(func=cmd_faa)

    queue = sub.add_parser("queue", help="segment-queue throughput bench")
    common(queue)
    queue.add_argument("--pattern", default="pairs", choices=["pairs", "enq4deq4"],
                       help="per-thread op pattern")
    queue.add_argument("--initial-size", type=int, default=0,
                       help="items preloaded before the run")
    queue.add_argument("--segment-size", type=int, default=1024,
                       help="cells per queue segment")
    queue.add_argument("--work", type=float, default=512.0,
                       help="geometric mean local work between ops, cycles")
    queue.add_argument("--duration", type=float, default=2.0, help="seconds per rep")
    queue.add_argument("--reps", type=int, default=5, help="repetitions")
    queue.set_defaults(func=cmd_queue)

    lincheck = sub.add_parser("lincheck", help="small-history linearizability stress")
    common(lincheck, default_m=2)
    lincheck.add_argument("--ops", type=int, default=2,
                          help="operations per thread per history")
    lincheck.add_argument("--histories", type=int, default=250,
                          help="number of histories to record and check")
    lincheck.set_defaults(func=cmd_lincheck)
    return parser


def cmd_faa(args: argparse.Namespace) -> int:
    config = FaaBenchConfig(
        impl=args.impl,
        m=args.m,
        direct_threads=args.direct,
        threads=args.threads,
        ratio_pct=args.ratio,
        work_mean_cycles=args.work,
        duration_s=args.duration,
        reps=args.reps,
        seed=args.seed,
        pin=args.pin,
        switch_interval_s=args.switch_interval,
        no_trim=args.no_trim,
        debug=args.debug,
        oversubscribe=args.oversubscribe,
        mixed_sign=args.mixed_sign,
    )
    results = run_faa_bench(config)
    print(f"faa impl={config.impl} m={config.m} d={config.direct_threads} "
          f"threads={config.threads} ratio={config.ratio_pct} "
          f"work={config.work_mean_cycles:g}")
    for r in results:
        line = (f"  rep {r.rep}: {r.total_ops} ops in {r.duration_s:.3f} s -> "
                f"{r.throughput:,.1f} ops/s, avg batch {r.avg_batch:.3f}, "
                f"fairness {r.fairness:.3f}")
        if config.direct_threads:
            line += (f", hp {r.hp_throughput:,.1f} ops/s, "
                     f"lp {r.lp_throughput:,.1f} ops/s")
        print(line)
    thr_mean, thr_std = mean_std(r.throughput for r in results)
    batch_mean, _ = mean_std(r.avg_batch for r in results)
    print(f"  throughput {thr_mean:,.1f} ± {thr_std:,.1f} ops/s, "
          f"avg batch {batch_mean:.3f}")
    if args.csv:
        append_csv(args.csv, FAA_COLUMNS, faa_rows(results))
        print(f"  appended {len(results)} rows to {args.csv}")
    return 0


def cmd_queue(args: argparse.Namespace) -> int:
    config = QueueBenchConfig(
        idx_impl=args.impl,
        m=args.m,
        threads=args.threads,
        pattern=args.pattern,
        initial_size=args.initial_size,
        segment_size=args.segment_size,
        work_mean_cycles=args.work,
        duration_s=args.duration,
        reps=args.reps,
        seed=args.seed,
        pin=args.pin,
        switch_interval_s=args.switch_interval,
        no_trim=args.no_trim,
        oversubscribe=args.oversubscribe,
    )
    results = run_queue_bench(config)
    print(f"queue idx={config.idx_impl} m={config.m} threads={config.threads} "
          f"pattern={config.pattern} initial={config.initial_size}")
    for r in results:
        print(f"  rep {r.rep}: {r.total_ops} ops in {r.duration_s:.3f} s -> "
              f"{r.throughput:,.1f} ops/s")
    thr_mean, thr_std = mean_std(r.throughput for r in results)
    print(f"  throughput {thr_mean:,.1f} ± {thr_std:,.1f} ops/s")
    if args.csv:
        append_csv(args.csv, QUEUE_COLUMNS, queue_rows(results))
        print(f"  appended {len(results)} rows to {args.csv}")
    return 0


def cmd_lincheck(args: argparse.Namespace) -> int:
    config = LincheckConfig(
        impl=args.impl,
        m=args.m,
        threads=args.threads,
        ops_per_thread=args.ops,
        histories=args.histories,
        seed=args.seed,
    )
    report = run_lincheck_stress(config)
    print(f"lincheck impl={config.impl} m={config.m} threads={config.threads} "
          f"ops={config.ops_per_thread} histories={report.histories}")
    print(f"  accepted {report.accepted}/{report.histories}, "
          f"invariant violations {report.invariant_violations}")
    if report.rejections:
        for index, reason in report.rejections[:5]:
            print(f"  rejected history {index}: {reason}", file=sys.stderr)
        return 2
    if report.invariant_violations:
        return 2
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help, 2 for usage errors -> config error
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except InvalidConfig as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except CorrectnessError as exc:
        print(f"correctness failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
