"""Timed multi-thread benchmark runs, correctness stress, and CSV output.

Benches are wall-clock-bounded: workers run their deterministic op streams
until the coordinator raises the stop flag. The first 10% of each run is
warmup — workers latch their op count when the measure flag flips, and only
ops after the latch count. Throughput rows carry enough configuration to be
self-describing; the CSV schemas below are the external interface consumed
by the report tool.

On a boxed GIL the default 5 ms switch interval would serialize every batch;
runs temporarily lower it (``switch_interval_s``, default 10 µs) so thread
interleaving approximates parallel contention, and restore it after.
"""

from __future__ import annotations

import csv
import math
import os
import random
import sys
import threading
import time
from dataclasses import dataclass, field
from statistics import fmean, stdev

from .core import CorrectnessError, HardwareCell, InvalidConfig
from .funnel import Funnel, FunnelConfig, recursive_funnel
from .lincheck import (
    OP_COMPARE_SWAP,
    OP_FETCH_ADD,
    OP_FETCH_ADD_DIRECT,
    OP_READ,
    HistoryRecorder,
    check_linearizable,
    faa_spec,
)
from .routing import FixedM, PriorityWrapped
from .segqueue import EMPTY, SegQueue
from .workload import (
    OP_FAA,
    WorkloadSpec,
    geometric_cycles,
    get_work_executor,
    op_stream,
    stream_rng,
)

__all__ = [
    "FAA_COLUMNS",
    "QUEUE_COLUMNS",
    "FaaBenchConfig",
    "FaaRunResult",
    "QueueBenchConfig",
    "QueueRunResult",
    "LincheckConfig",
    "LincheckReport",
    "build_faa_object",
    "run_faa_bench",
    "run_queue_bench",
    "run_lincheck_stress",
    "append_csv",
    "faa_rows",
    "queue_rows",
    "mean_std",
]

FAA_COLUMNS = [
    "impl", "m", "d", "threads", "ratio_pct", "work_cycles", "rep",
    "duration_s", "total_ops", "throughput", "avg_batch", "fairness",
    "hp_throughput", "lp_throughput",
]

QUEUE_COLUMNS = [
    "queue_impl", "idx_impl", "m", "threads", "pattern", "initial_size",
    "work_cycles", "rep", "duration_s", "total_ops", "throughput",
]

IMPLS = ("hardware", "aggfunnel", "aggfunnel-recursive")
PATTERNS = ("pairs", "enq4deq4")
PIN_POLICIES = ("none", "rr")

#: Reserved producer tag for items preloaded before a queue run.
PRELOAD_PRODUCER_SHIFT = 40


# --------------------------------------------------------------------- config

@dataclass
class FaaBenchConfig:
    impl: str = "aggfunnel"
    m: int = 6
    direct_threads: int = 0
    threads: int = 8
    ratio_pct: int = 90
    work_mean_cycles: float = 512.0
    duration_s: float = 2.0
    reps: int = 5
    seed: int = 0
    pin: str = "none"
    switch_interval_s: float = 1e-5
    no_trim: bool = False
    debug: bool = False
    oversubscribe: bool = False
    mixed_sign: bool = False
    df_min: int = 1
    df_max: int = 100

    def validate(self) -> None:
        if self.impl not in IMPLS:
            raise InvalidConfig(f"unknown impl {self.impl!r}; choose from {IMPLS}")
        if self.m < 1:
            raise InvalidConfig(f"m must be >= 1, got {self.m}")
        if self.threads < 1:
            raise InvalidConfig(f"threads must be >= 1, got {self.threads}")
        if not 0 <= self.direct_threads <= self.threads:
            raise InvalidConfig(
                f"direct threads must be in [0, threads], got {self.direct_threads}"
            )
        if not 0 <= self.ratio_pct <= 100:
            raise InvalidConfig(f"ratio_pct must be in [0, 100], got {self.ratio_pct}")
        if self.duration_s <= 0:
            raise InvalidConfig(f"duration_s must be > 0, got {self.duration_s}")
        if self.reps < 1:
            raise InvalidConfig(f"reps must be >= 1, got {self.reps}")
        if self.pin not in PIN_POLICIES:
            raise InvalidConfig(f"unknown pin policy {self.pin!r}; choose from {PIN_POLICIES}")
        if self.work_mean_cycles < 0:
            raise InvalidConfig(f"work_mean_cycles must be >= 0, got {self.work_mean_cycles}")
        if self.switch_interval_s <= 0:
            raise InvalidConfig("switch_interval_s must be > 0")
        available = os.cpu_count() or 1
        if self.threads > available and not self.oversubscribe:
            raise InvalidConfig(
                f"{self.threads} threads exceed {available} hardware threads; "
                f"pass oversubscribe to allow it"
            )


@dataclass(frozen=True)
class FaaRunResult:
    impl: str
    m: int
    d: int
    threads: int
    ratio_pct: int
    work_cycles: float
    rep: int
    duration_s: float
    total_ops: int
    throughput: float
    avg_batch: float
    fairness: float
    hp_throughput: float
    lp_throughput: float

    def to_row(self) -> list:
        return [
            self.impl, self.m, self.d, self.threads, self.ratio_pct,
            f"{self.work_cycles:g}", self.rep, f"{self.duration_s:.6f}",
            self.total_ops, f"{self.throughput:.3f}", f"{self.avg_batch:.4f}",
            f"{self.fairness:.4f}", f"{self.hp_throughput:.3f}",
            f"{self.lp_throughput:.3f}",
        ]


@dataclass
class QueueBenchConfig:
    idx_impl: str = "hardware"
    m: int = 6
    threads: int = 8
    pattern: str = "pairs"
    initial_size: int = 0
    segment_size: int = 1024
    work_mean_cycles: float = 512.0
    duration_s: float = 2.0
    reps: int = 5
    seed: int = 0
    pin: str = "none"
    switch_interval_s: float = 1e-5
    no_trim: bool = False
    oversubscribe: bool = False

    def validate(self) -> None:
        if self.idx_impl not in IMPLS:
            raise InvalidConfig(f"unknown impl {self.idx_impl!r}; choose from {IMPLS}")
        if self.pattern not in PATTERNS:
            raise InvalidConfig(f"unknown pattern {self.pattern!r}; choose from {PATTERNS}")
        if self.m < 1:
            raise InvalidConfig(f"m must be >= 1, got {self.m}")
        if self.threads < 1:
            raise InvalidConfig(f"threads must be >= 1, got {self.threads}")
        if self.initial_size < 0:
            raise InvalidConfig(f"initial_size must be >= 0, got {self.initial_size}")
        if self.segment_size < 2:
            raise InvalidConfig(f"segment_size must be >= 2, got {self.segment_size}")
        if self.duration_s <= 0:
            raise InvalidConfig(f"duration_s must be > 0, got {self.duration_s}")
        if self.reps < 1:
            raise InvalidConfig(f"reps must be >= 1, got {self.reps}")
        if self.pin not in PIN_POLICIES:
            raise InvalidConfig(f"unknown pin policy {self.pin!r}; choose from {PIN_POLICIES}")
        available = os.cpu_count() or 1
        if self.threads > available and not self.oversubscribe:
            raise InvalidConfig(
                f"{self.threads} threads exceed {available} hardware threads; "
                f"pass oversubscribe to allow it"
            )


@dataclass(frozen=True)
class QueueRunResult:
    queue_impl: str
    idx_impl: str
    m: int
    threads: int
    pattern: str
    initial_size: int
    work_cycles: float
    rep: int
    duration_s: float
    total_ops: int
    throughput: float

    def to_row(self) -> list:
        return [
            self.queue_impl, self.idx_impl, self.m, self.threads, self.pattern,
            self.initial_size, f"{self.work_cycles:g}", self.rep,
            f"{self.duration_s:.6f}", self.total_ops, f"{self.throughput:.3f}",
        ]


@dataclass
class LincheckConfig:
    impl: str = "aggfunnel"
    m: int = 2
    threads: int = 3
    ops_per_thread: int = 2
    histories: int = 250
    seed: int = 0

    def validate(self) -> None:
        if self.impl not in IMPLS:
            raise InvalidConfig(f"unknown impl {self.impl!r}; choose from {IMPLS}")
        if self.m < 1:
            raise InvalidConfig(f"m must be >= 1, got {self.m}")
        if self.threads < 1:
            raise InvalidConfig(f"threads must be >= 1, got {self.threads}")
        if self.ops_per_thread < 1:
            raise InvalidConfig(f"ops_per_thread must be >= 1, got {self.ops_per_thread}")
        if self.threads * self.ops_per_thread > 12:
            raise InvalidConfig(
                "history size threads*ops_per_thread exceeds the exact-checker bound (12)"
            )
        if self.histories < 1:
            raise InvalidConfig(f"histories must be >= 1, got {self.histories}")


@dataclass
class LincheckReport:
    histories: int
    accepted: int
    invariant_violations: int
    rejections: list = field(default_factory=list)  # (history_index, reason)

    @property
    def ok(self) -> bool:
        return not self.rejections and self.invariant_violations == 0


# ------------------------------------------------------------- object builder

def build_faa_object(impl: str, m: int, threads: int, direct_threads: int = 0,
                     no_trim: bool = False, debug: bool = False):
    """Construct the benched fetch-and-add object.

    ``aggfunnel-recursive`` stacks ``[ceil(threads/m), m]`` (outermost
    first). When ``direct_threads`` > 0 the outermost router is wrapped so
    thread ids below it bypass to Main.
    """
    if impl == "hardware":
        return HardwareCell(0)
    config = FunnelConfig(no_trim=no_trim, debug=debug)
    if impl == "aggfunnel":
        router = FixedM(m)
        if direct_threads:
            router = PriorityWrapped(direct_threads, router)
        return Funnel(m, threads, router=router, config=config)
    if impl == "aggfunnel-recursive":
        levels = [max(1, math.ceil(threads / m)), m]

        def factory(level_m: int, level: int):
            router = FixedM(level_m)
            if direct_threads and level == 0:
                router = PriorityWrapped(direct_threads, router)
            return router

        return recursive_funnel(levels, threads, router_factory=factory, config=config)
    raise InvalidConfig(f"unknown impl {impl!r}")


def _pin_self(slot: int, policy: str) -> None:
    if policy != "rr":
        return
    try:
        cpus = sorted(os.sched_getaffinity(0))
        os.sched_setaffinity(0, {cpus[slot % len(cpus)]})
    except (AttributeError, OSError):  # pragma: no cover - non-Linux hosts
        pass


class _switch_interval:
    """Temporarily set the interpreter's thread switch interval."""

    def __init__(self, seconds: float):
        self.seconds = seconds
        self._saved = None

    def __enter__(self):
        self._saved = sys.getswitchinterval()
        sys.setswitchinterval(self.seconds)
        return self

    def __exit__(self, *exc):
        sys.setswitchinterval(self._saved)
        return False


# ------------------------------------------------------------------ faa bench

def run_faa_bench(config: FaaBenchConfig) -> list[FaaRunResult]:
    """Run ``config.reps`` timed repetitions; one result row each."""
    config.validate()
    results = []
    with _switch_interval(config.switch_interval_s):
        for rep in range(config.reps):
            results.append(_faa_rep(config, rep))
    return results


def _faa_rep(config: FaaBenchConfig, rep: int) -> FaaRunResult:
    p = config.threads
    obj = build_faa_object(
        config.impl, config.m, p, config.direct_threads,
        no_trim=config.no_trim, debug=config.debug,
    )
    spec = WorkloadSpec(
        seed=config.seed + 7919 * rep,
        faa_ratio_pct=config.ratio_pct,
        df_min=config.df_min,
        df_max=config.df_max,
        mixed_sign=config.mixed_sign,
        work_mean_cycles=config.work_mean_cycles,
    )
    executor = get_work_executor() if config.work_mean_cycles > 0 else None
    iters_per_cycle = executor.iters_per_cycle if executor else 0.0

    stop = [False]
    measuring = [False]
    counts = [0] * p
    marks = [0] * p
    barrier = threading.Barrier(p + 1)

    def worker(tid: int) -> None:
        _pin_self(tid, config.pin)
        stream = op_stream(spec, tid)
        fetch_add = obj.fetch_add
        read = obj.read
        barrier.wait()
        n = 0
        mark = -1
        for kind, df, cycles in stream:
            if kind == OP_FAA:
                fetch_add(tid, df)
            else:
                read()
            if cycles:
                acc = 0
                for _ in range(int(cycles * iters_per_cycle)):
                    acc += 1
            n += 1
            if measuring[0]:
                if mark < 0:
                    mark = n
            if stop[0]:
                break
        counts[tid] = n
        marks[tid] = mark if mark >= 0 else n

    threads = [
        threading.Thread(target=worker, args=(tid,), name=f"faa-worker-{tid}")
        for tid in range(p)
    ]
    for t in threads:
        t.start()
    barrier.wait()
    time.sleep(config.duration_s * 0.1)
    is_funnel = isinstance(obj, Funnel)
    snap0 = obj.stats.snapshot() if is_funnel else None
    measuring[0] = True
    t0 = time.monotonic()
    time.sleep(config.duration_s * 0.9)
    stop[0] = True
    t1 = time.monotonic()
    for t in threads:
        t.join()
    snap1 = obj.stats.snapshot() if is_funnel else None

    window = t1 - t0
    # marks[tid] counts the op during which the flag was first seen; that op
    # straddles the flip, so it is excluded too.
    measured = [counts[tid] - marks[tid] for tid in range(p)]
    measured = [max(0, ops) for ops in measured]
    total = sum(measured)
    d = config.direct_threads
    hp_ops = sum(measured[:d])
    lp_ops = sum(measured[d:])
    peak = max(measured) if measured else 0
    fairness = (min(measured) / peak) if peak > 0 else 1.0
    avg_batch = snap1.delta(snap0).avg_batch if is_funnel else 1.0

    if config.debug and is_funnel:
        bad = _funnel_violations(obj, "invariant_violations")
        if bad:
            raise CorrectnessError(
                f"{bad} batch-invariant violations: {obj.invariant_violations[:3]}"
            )
    if is_funnel and _funnel_violations(obj, "canary_violations"):
        raise CorrectnessError("reclamation canary hits during bench")

    return FaaRunResult(
        impl=config.impl,
        m=config.m,
        d=d,
        threads=p,
        ratio_pct=config.ratio_pct,
        work_cycles=config.work_mean_cycles,
        rep=rep,
        duration_s=window,
        total_ops=total,
        throughput=total / window if window > 0 else 0.0,
        avg_batch=avg_batch,
        fairness=fairness,
        hp_throughput=hp_ops / window if window > 0 else 0.0,
        lp_throughput=lp_ops / window if window > 0 else 0.0,
    )


# ---------------------------------------------------------------- queue bench

def run_queue_bench(config: QueueBenchConfig) -> list[QueueRunResult]:
    """Timed queue repetitions; verifies conservation and per-producer FIFO
    after every rep and raises :class:`CorrectnessError` on any violation."""
    config.validate()
    results = []
    with _switch_interval(config.switch_interval_s):
        for rep in range(config.reps):
            results.append(_queue_rep(config, rep))
    return results


def _build_queue(config: QueueBenchConfig) -> SegQueue:
    head = build_faa_object(config.idx_impl, config.m, config.threads,
                            no_trim=config.no_trim)
    tail = build_faa_object(config.idx_impl, config.m, config.threads,
                            no_trim=config.no_trim)
    return SegQueue(config.threads, head=head, tail=tail,
                    segment_size=config.segment_size)


def _queue_rep(config: QueueBenchConfig, rep: int) -> QueueRunResult:
    p = config.threads
    queue = _build_queue(config)
    preload_producer = p << PRELOAD_PRODUCER_SHIFT
    for seq in range(config.initial_size):
        queue.enqueue(0, preload_producer | seq)

    executor = get_work_executor() if config.work_mean_cycles > 0 else None
    iters_per_cycle = executor.iters_per_cycle if executor else 0.0
    spec = WorkloadSpec(seed=config.seed + 104729 * rep,
                        work_mean_cycles=config.work_mean_cycles)

    stop = [False]
    measuring = [False]
    counts = [0] * p
    marks = [0] * p
    enq_counts = [0] * p
    taken: list[list[int]] = [[] for _ in range(p)]
    barrier = threading.Barrier(p + 1)
    burst = 1 if config.pattern == "pairs" else 4

    def worker(tid: int) -> None:
        _pin_self(tid, config.pin)
        rng = stream_rng(spec.seed, tid)
        mean = config.work_mean_cycles
        enqueue = queue.enqueue
        dequeue = queue.dequeue
        tag = tid << PRELOAD_PRODUCER_SHIFT
        got = taken[tid]
        barrier.wait()
        n = 0
        mark = -1
        seq = 0
        while not stop[0]:
            for _ in range(burst):
                enqueue(tid, tag | seq)
                seq += 1
                n += 1
                if mean > 0:
                    acc = 0
                    for _ in range(int(geometric_cycles(rng, mean) * iters_per_cycle)):
                        acc += 1
            if measuring[0] and mark < 0:
                mark = n
            if stop[0]:
                break
            for _ in range(burst):
                item = dequeue(tid)
                if item is not EMPTY:
                    got.append(item)
                n += 1
                if mean > 0:
                    acc = 0
                    for _ in range(int(geometric_cycles(rng, mean) * iters_per_cycle)):
                        acc += 1
        counts[tid] = n
        marks[tid] = mark if mark >= 0 else n
        enq_counts[tid] = seq

    threads = [
        threading.Thread(target=worker, args=(tid,), name=f"queue-worker-{tid}")
        for tid in range(p)
    ]
    for t in threads:
        t.start()
    barrier.wait()
    time.sleep(config.duration_s * 0.1)
    measuring[0] = True
    t0 = time.monotonic()
    time.sleep(config.duration_s * 0.9)
    stop[0] = True
    t1 = time.monotonic()
    for t in threads:
        t.join()

    _verify_queue_run(config, queue, enq_counts, taken)

    window = t1 - t0
    measured = [max(0, counts[tid] - marks[tid]) for tid in range(p)]
    total = sum(measured)
    return QueueRunResult(
        queue_impl="segqueue",
        idx_impl=config.idx_impl,
        m=config.m,
        threads=p,
        pattern=config.pattern,
        initial_size=config.initial_size,
        work_cycles=config.work_mean_cycles,
        rep=rep,
        duration_s=window,
        total_ops=total,
        throughput=total / window if window > 0 else 0.0,
    )


def _verify_queue_run(config: QueueBenchConfig, queue: SegQueue,
                      enq_counts: list[int], taken: list[list[int]]) -> None:
    """Multiset conservation + per-consumer per-producer FIFO order."""
    from collections import Counter

    p = config.threads
    expected: Counter = Counter()
    preload_producer = p << PRELOAD_PRODUCER_SHIFT
    for seq in range(config.initial_size):
        expected[preload_producer | seq] += 1
    for tid in range(p):
        tag = tid << PRELOAD_PRODUCER_SHIFT
        for seq in range(enq_counts[tid]):
            expected[tag | seq] += 1

    observed: Counter = Counter()
    for items in taken:
        observed.update(items)
    observed.update(queue.drain_remaining())

    if expected != observed:
        missing = expected - observed
        extra = observed - expected
        raise CorrectnessError(
            f"queue conservation violated: {sum(missing.values())} missing, "
            f"{sum(extra.values())} unexpected (samples: "
            f"{list(missing)[:3]} / {list(extra)[:3]})"
        )

    mask = (1 << PRELOAD_PRODUCER_SHIFT) - 1
    for consumer, items in enumerate(taken):
        last_seq: dict[int, int] = {}
        for item in items:
            producer = item >> PRELOAD_PRODUCER_SHIFT
            seq = item & mask
            prev = last_seq.get(producer, -1)
            if seq <= prev:
                raise CorrectnessError(
                    f"per-producer FIFO violated at consumer {consumer}: "
                    f"producer {producer} seq {seq} after {prev}"
                )
            last_seq[producer] = seq

    if queue.canary_violations:
        raise CorrectnessError(
            f"{len(queue.canary_violations)} segment reclamation canary hits"
        )
    for index in (queue.head, queue.tail):
        if isinstance(index, Funnel) and _funnel_violations(index, "canary_violations"):
            raise CorrectnessError("funnel index reclamation canary hits")


# ------------------------------------------------------------ lincheck stress

def run_lincheck_stress(config: LincheckConfig, factory=None) -> LincheckReport:
    """Record many small concurrent histories and check each one exactly.

    The funnel runs in debug mode so publication-point invariant checks are
    armed; any violation fails the report alongside checker rejections.
    ``factory``, when given, overrides the built object: it is called once
    per history and must return a fresh fetch-and-add object.
    """
    config.validate()
    # A fine switch interval is what makes the recorded intervals actually
    # overlap; at the interpreter default most histories would be trivially
    # sequential and the check would have no discriminating power.
    with _switch_interval(1e-5):
        return _lincheck_stress_body(config, factory)


def _lincheck_stress_body(config: LincheckConfig, factory) -> LincheckReport:
    spec = faa_spec()
    rejections: list = []
    invariant_violations = 0
    for index in range(config.histories):
        if factory is not None:
            obj = factory()
        else:
            obj = build_faa_object(config.impl, config.m, config.threads, debug=True)
        recorder = HistoryRecorder(config.threads)
        barrier = threading.Barrier(config.threads)
        hot = []  # spin gate: list.append is atomic under the lock

        def worker(tid: int, history_index: int = index) -> None:
            rng = random.Random(
                (config.seed + 1) * 15485863 + history_index * 6151 + tid
            )
            barrier.wait()
            # The OS barrier wakes threads tens of microseconds apart —
            # longer than the whole recorded phase — so without a second,
            # busy-spin gate the histories would be serial and the
            # contended paths would never run. Spinning keeps every thread
            # scheduled and GIL-contending when recording starts.
            hot.append(tid)
            spins = 0
            while len(hot) < config.threads and spins < 500_000:
                spins += 1
            for _ in range(config.ops_per_thread):
                roll = rng.random()
                if roll < 0.55:
                    df = rng.randint(1, 5) * (1 if rng.random() < 0.7 else -1)
                    t_inv = time.monotonic_ns()
                    value = obj.fetch_add(tid, df)
                    t_resp = time.monotonic_ns()
                    recorder.record(tid, OP_FETCH_ADD, (df,), value, t_inv, t_resp)
                elif roll < 0.70:
                    df = rng.randint(1, 5)
                    t_inv = time.monotonic_ns()
                    value = obj.fetch_add_direct(tid, df)
                    t_resp = time.monotonic_ns()
                    recorder.record(tid, OP_FETCH_ADD_DIRECT, (df,), value, t_inv, t_resp)
                elif roll < 0.85:
                    t_inv = time.monotonic_ns()
                    value = obj.read()
                    t_resp = time.monotonic_ns()
                    recorder.record(tid, OP_READ, (), value, t_inv, t_resp)
                else:
                    old = rng.randint(0, 8)
                    new = rng.randint(-5, 5)
                    t_inv = time.monotonic_ns()
                    value = obj.compare_swap(old, new)
                    t_resp = time.monotonic_ns()
                    recorder.record(tid, OP_COMPARE_SWAP, (old, new), value, t_inv, t_resp)

        threads = [
            threading.Thread(target=worker, args=(tid,)) for tid in range(config.threads)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()

        if isinstance(obj, Funnel):
            invariant_violations += _funnel_violations(obj, "invariant_violations")
            invariant_violations += _funnel_violations(obj, "canary_violations")
        result = check_linearizable(recorder.history(), spec)
        if not result.accepted:
            rejections.append((index, result.reason))

    return LincheckReport(
        histories=config.histories,
        accepted=config.histories - len(rejections),
        invariant_violations=invariant_violations,
        rejections=rejections,
    )


def _funnel_violations(obj, attr: str = "invariant_violations") -> int:
    """Total length of ``attr`` across every funnel level of ``obj``."""
    total = 0
    level = obj
    while isinstance(level, Funnel):
        total += len(getattr(level, attr))
        level = level.main
    return total


# ----------------------------------------------------------------------- csv

def append_csv(path: str, columns: list[str], rows: list[list]) -> None:
    """Append rows, writing the header only when creating the file."""
    need_header = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as f:
        writer = csv.writer(f)
        if need_header:
            writer.writerow(columns)
        writer.writerows(rows)


def faa_rows(results: list[FaaRunResult]) -> list[list]:
    return [r.to_row() for r in results]


def queue_rows(results: list[QueueRunResult]) -> list[list]:
    return [r.to_row() for r in results]


def mean_std(values) -> tuple[float, float]:
    values = list(values)
    if not values:
        return 0.0, 0.0
    if len(values) == 1:
        return float(values[0]), 0.0
    return fmean(values), stdev(values)
