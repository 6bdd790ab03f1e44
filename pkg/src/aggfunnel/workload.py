"""Deterministic workload generation and calibrated local work.

Each worker thread draws its operation sequence from its own seeded
generator, so a run's op stream depends only on ``(seed, tid)`` — never on
timing — and re-running a configuration replays identical sequences. Local
work between operations is geometric in "cycles" (mean configurable); the
:class:`WorkExecutor` converts cycles into a calibrated busy loop so the
abstract workload is comparable across hosts.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass

from .core import InvalidConfig

__all__ = [
    "OP_FAA",
    "OP_READ",
    "WorkloadSpec",
    "op_stream",
    "geometric_cycles",
    "WorkExecutor",
    "get_work_executor",
]

OP_FAA = "faa"
OP_READ = "read"


@dataclass(frozen=True)
class WorkloadSpec:
    """Parameters of a per-thread op stream.

    ``faa_ratio_pct`` of operations are fetch-and-adds with a delta drawn
    uniformly from ``[df_min, df_max]`` (sign flipped with probability 1/2
    when ``mixed_sign``); the rest are reads. ``work_mean_cycles`` is the
    geometric mean of local work between operations, in cycles.
    """

    seed: int = 0
    faa_ratio_pct: int = 100
    df_min: int = 1
    df_max: int = 100
    mixed_sign: bool = False
    work_mean_cycles: float = 512.0

    def validate(self) -> None:
        if not 0 <= self.faa_ratio_pct <= 100:
            raise InvalidConfig(f"faa_ratio_pct must be in [0, 100], got {self.faa_ratio_pct}")
        if self.df_min < 1 or self.df_max < self.df_min:
            raise InvalidConfig(f"need 1 <= df_min <= df_max, got [{self.df_min}, {self.df_max}]")
        if self.work_mean_cycles < 0:
            raise InvalidConfig(f"work_mean_cycles must be >= 0, got {self.work_mean_cycles}")


def geometric_cycles(rng: random.Random, mean: float) -> int:
    """Geometric draw on {0, 1, 2, ...} with the given mean.

    Success probability p = 1/(mean+1), sampled by inverse CDF, so
    E[X] = (1-p)/p = mean.
    """
    if mean <= 0:
        return 0
    u = rng.random()
    while u <= 0.0:  # pragma: no cover - random() is [0, 1)
        u = rng.random()
    return int(math.log(u) / math.log(mean / (mean + 1.0)))


def stream_rng(seed: int, tid: int) -> random.Random:
    """The generator for thread ``tid`` of a run seeded with ``seed``."""
    return random.Random(((seed + 1) * 1_000_003 + tid) & 0xFFFFFFFFFFFFFFFF)


def op_stream(spec: WorkloadSpec, tid: int):
    """Yield ``(kind, df, work_cycles)`` tuples forever, deterministically."""
    rng = stream_rng(spec.seed, tid)
    randrange = rng.randrange
    randint = rng.randint
    uniform = rng.random
    ratio = spec.faa_ratio_pct
    df_min, df_max = spec.df_min, spec.df_max
    mixed = spec.mixed_sign
    mean = spec.work_mean_cycles
    if mean > 0:
        log_q = math.log(mean / (mean + 1.0))
        log = math.log
    while True:
        kind = OP_FAA if randrange(100) < ratio else OP_READ
        df = randint(df_min, df_max)
        if mixed and randrange(2):
            df = -df
        if mean > 0:
            u = uniform()
            cycles = int(log(u) / log_q) if u > 0.0 else 0
        else:
            cycles = 0
        yield kind, df, cycles


def _spin(n: int) -> int:
    acc = 0
    for _ in range(n):
        acc += 1
    return acc


def _cpu_hz() -> float:
    try:
        with open("/proc/cpuinfo") as f:
            for line in f:
                if line.lower().startswith("cpu mhz"):
                    return float(line.split(":", 1)[1]) * 1e6
    except (OSError, ValueError):
        pass
    return 2.0e9


class WorkExecutor:
    """Busy-loop executor calibrated so ``run(cycles)`` burns roughly that
    many CPU cycles of pure Python work.

    Calibration takes the fastest of several trials: a preempted trial only
    ever under-measures the loop rate, so the max is the stablest estimate.
    """

    _CAL_ITERS = 200_000
    _CAL_TRIALS = 5

    def __init__(self, hz: float | None = None):
        hz = hz if hz is not None else _cpu_hz()
        best = 0.0
        for _ in range(self._CAL_TRIALS):
            start = time.perf_counter()
            _spin(self._CAL_ITERS)
            elapsed = time.perf_counter() - start
            best = max(best, self._CAL_ITERS / max(elapsed, 1e-9))
        self.iters_per_cycle = best / hz

    def run(self, cycles: int) -> None:
        n = int(cycles * self.iters_per_cycle)
        if n > 0:
            _spin(n)


_executor: WorkExecutor | None = None


def get_work_executor() -> WorkExecutor:
    """Process-wide calibrated executor (calibration runs once)."""
    global _executor
    if _executor is None:
        _executor = WorkExecutor()
    return _executor
