"""Routing policies: which aggregator (or the direct path) an op targets.

A policy maps ``(thread_id, sign)`` to an aggregator index within the bank
for that sign, or to :data:`DIRECT` to bypass batching entirely. The pure
functions return explicit ``(bank, index)`` pairs; the policy classes wrap
them with whatever per-thread state they need and are what the funnel
consumes (the funnel picks the bank itself from the sign of ``df``).
"""

from __future__ import annotations

import math
import random

from .core import InvalidConfig

__all__ = [
    "POSITIVE",
    "NEGATIVE",
    "DIRECT",
    "route_even_spread",
    "route_fixed_m",
    "route_priority",
    "EvenSpread",
    "FixedM",
    "RandomRoute",
    "PriorityWrapped",
]

POSITIVE = "positive"
NEGATIVE = "negative"
#: Sentinel routing target: skip every aggregator, apply at Main.
DIRECT = "direct"


def _bank(df_sign: int) -> str:
    return POSITIVE if df_sign > 0 else NEGATIVE


def route_even_spread(thread_id: int, p: int, df_sign: int) -> tuple[str, int]:
    """Square-root grouping: m = isqrt(p) groups of ~sqrt(p) adjacent threads.

    Index is ``floor(thread_id / sqrt(p))``; when p is not a perfect square
    the trailing remainder threads clamp into the last group, keeping the
    index inside ``[0, m)``.
    """
    if p < 1:
        raise InvalidConfig(f"p must be >= 1, got {p}")
    m = math.isqrt(p)
    index = min(int(thread_id / math.sqrt(p)), m - 1)
    return _bank(df_sign), index


def route_fixed_m(thread_id: int, m: int, df_sign: int) -> tuple[str, int]:
    """Modulo routing over a fixed number of aggregators per sign."""
    if m < 1:
        raise InvalidConfig(f"m must be >= 1, got {m}")
    return _bank(df_sign), thread_id % m


def route_priority(thread_id: int, d: int, inner, df_sign: int):
    """First ``d`` thread ids go direct; the rest are re-indexed densely
    (``thread_id - d``) and handed to ``inner(thread_id, df_sign)``."""
    if d < 0:
        raise InvalidConfig(f"d must be >= 0, got {d}")
    if thread_id < d:
        return DIRECT
    return inner(thread_id - d, df_sign)


class EvenSpread:
    """Policy form of :func:`route_even_spread` for a fixed thread count."""

    __slots__ = ("p", "m", "_sqrt_p")

    def __init__(self, p: int):
        if p < 1:
            raise InvalidConfig(f"p must be >= 1, got {p}")
        self.p = p
        self.m = math.isqrt(p)
        self._sqrt_p = math.sqrt(p)

    def route(self, tid: int, df_sign: int) -> int:
        index = int(tid / self._sqrt_p)
        m1 = self.m - 1
        return index if index < m1 else m1


class FixedM:
    """Policy form of :func:`route_fixed_m`."""

    __slots__ = ("m",)

    def __init__(self, m: int):
        if m < 1:
            raise InvalidConfig(f"m must be >= 1, got {m}")
        self.m = m

    def route(self, tid: int, df_sign: int) -> int:
        return tid % self.m


class RandomRoute:
    """Uniform per-op choice from seeded per-thread generators.

    No shared mutable state: thread ``tid`` draws from its own
    ``random.Random`` seeded from ``(seed, tid)``, so routing is deterministic
    per thread and race-free without locks.
    """

    __slots__ = ("m", "p", "_rngs")

    def __init__(self, m: int, p: int, seed: int = 0):
        if m < 1:
            raise InvalidConfig(f"m must be >= 1, got {m}")
        if p < 1:
            raise InvalidConfig(f"p must be >= 1, got {p}")
        self.m = m
        self.p = p
        self._rngs = [random.Random((seed << 20) ^ (tid + 1)) for tid in range(p)]

    def route(self, tid: int, df_sign: int) -> int:
        return self._rngs[tid].randrange(self.m)


class PriorityWrapped:
    """First ``d`` thread ids bypass to Main; the rest use ``inner`` re-indexed."""

    __slots__ = ("d", "inner", "m")

    def __init__(self, d: int, inner):
        if d < 0:
            raise InvalidConfig(f"d must be >= 0, got {d}")
        self.d = d
        self.inner = inner
        self.m = inner.m

    def route(self, tid: int, df_sign: int):
        if tid < self.d:
            return DIRECT
        return self.inner.route(tid - self.d, df_sign)
