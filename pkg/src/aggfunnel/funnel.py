"""Batched fetch-and-add through per-sign combining points.

A :class:`Funnel` wraps a Main fetch-and-add word with ``m`` positive and
``m`` negative :class:`Aggregator` cells. An operation applies its delta to
an aggregator chosen by the routing policy, then waits until the published
batch chain covers its slice of the aggregator's prefix sum. Exactly one
operation per batch — the one whose before-value equals the previous batch's
after-value — becomes the *delegate*: it reads the aggregator, applies the
whole accumulated delta to Main with a single RMW, and publishes a new
:class:`Batch` carrying the Main value from before that application. Every
other operation in the batch recovers its own result arithmetically from the
published record:

    result = batch.main_before + (own aggregator-before) - batch.before

Batch chains per aggregator satisfy, at every publication point:

  * |aggregator.value| >= |newest.after|
  * each batch covers a non-empty slice: |after| > |before|
  * consecutive batches tile exactly: before == previous.after
  * the chain bottoms out at a sentinel with after == 0

Zero-delta calls read Main directly. ``fetch_add_direct`` bypasses every
aggregator (at every nesting level) and applies straight to Main.

Reclamation: old batches are unreachable once no in-flight operation can
target them. Each operation announces a lower bound on its slice key before
its aggregator RMW (the aggregator value is monotone in magnitude, so a
pre-RMW read is a valid bound), tightens it to the exact key after, and
clears it on completion. A delegate trims the chain only below the oldest
batch still needed by the minimum announced bound, and severed nodes go
through the epoch domain, which poisons them as a use-after-reclaim canary.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass

from .core import HardwareCell, InvalidConfig
from .reclaim import EpochDomain
from .routing import DIRECT, FixedM

__all__ = [
    "Batch",
    "Aggregator",
    "Funnel",
    "FunnelConfig",
    "FunnelStats",
    "StatsSnapshot",
    "CorruptedBatchChain",
    "find_batch",
    "recursive_funnel",
]

#: Announce-slot value meaning "no operation in flight on this aggregator".
IDLE = 1 << 63


class CorruptedBatchChain(RuntimeError):
    """A batch-chain walk could not locate a covering batch."""


class Batch:
    """Immutable published record of one delegate application to Main.

    ``previous`` links to the batch published just before this one on the
    same aggregator; ``retired`` is the reclamation canary flag.
    """

    __slots__ = ("before", "after", "main_before", "previous", "retired")

    def __init__(self, before: int, after: int, main_before: int, previous):
        self.before = before
        self.after = after
        self.main_before = main_before
        self.previous = previous
        self.retired = False

    def reclaim(self) -> None:
        self.retired = True

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Batch(before={self.before}, after={self.after}, main_before={self.main_before})"


class Aggregator:
    """One combining cell: a prefix-sum accumulator plus its batch chain."""

    __slots__ = ("lock", "trim_lock", "value", "last", "announce", "chain_len")

    def __init__(self, p: int):
        self.lock = threading.Lock()
        self.trim_lock = threading.Lock()
        self.value = 0
        # Sentinel batch: after == 0 so the very first op (before == 0) is
        # the delegate and every later op finds a covering successor.
        self.last = Batch(0, 0, 0, None)
        self.announce = [IDLE] * p
        self.chain_len = 1


def find_batch(last: Batch, a_before: int, canary: list | None = None) -> Batch:
    """Walk the chain from ``last`` to the batch covering ``a_before``.

    The covering batch satisfies |before| <= |a_before| < |after|. Callers
    that lost the delegate test are guaranteed one exists at or below
    ``last``; under contention the head itself covers most lookups, so the
    walk is usually a single step. ``canary`` (a list) collects the key for
    every visited batch that was already reclaimed — a correct reclamation
    protocol never adds to it.
    """
    key = a_before if a_before >= 0 else -a_before
    batch = last
    while True:
        if canary is not None and batch.retired:
            canary.append(key)
        if abs(batch.before) <= key:
            break
        batch = batch.previous
        if batch is None:
            raise CorruptedBatchChain(
                f"chain bottom reached with no batch covering |{a_before}|"
            )
    if key >= abs(batch.after):
        raise CorruptedBatchChain(
            f"nearest batch [{batch.before}, {batch.after}) does not cover |{a_before}|"
        )
    return batch


@dataclass(frozen=True)
class FunnelConfig:
    """Tunables; defaults suit heavily oversubscribed CPython threads.

    The wait loop re-reads the chain head ``spin_limit`` times, then yields
    the scheduler ``yield_limit`` times, then escalates to timed sleeps
    doubling up to ``max_sleep_s`` — parked waiters are what lets delegates
    get scheduled promptly on few cores.
    """

    trim_threshold: int = 64
    no_trim: bool = False
    debug: bool = False
    spin_limit: int = 4
    yield_limit: int = 16
    max_sleep_s: float = 0.0002


@dataclass(frozen=True)
class StatsSnapshot:
    """Per-thread op counters at one instant (tuples indexed by tid)."""

    completed: tuple
    delegated: tuple
    direct: tuple

    def delta(self, earlier: "StatsSnapshot") -> "StatsSnapshot":
        return StatsSnapshot(
            tuple(a - b for a, b in zip(self.completed, earlier.completed)),
            tuple(a - b for a, b in zip(self.delegated, earlier.delegated)),
            tuple(a - b for a, b in zip(self.direct, earlier.direct)),
        )

    @property
    def avg_batch(self) -> float:
        """Operations applied to Main per Main application."""
        applications = sum(self.delegated) + sum(self.direct)
        if applications == 0:
            return 1.0
        return (sum(self.completed) + sum(self.direct)) / applications


class FunnelStats:
    """Per-thread counters: funneled completions, delegations, direct ops."""

    __slots__ = ("completed", "delegated", "direct")

    def __init__(self, p: int):
        self.completed = [0] * p
        self.delegated = [0] * p
        self.direct = [0] * p

    def snapshot(self) -> StatsSnapshot:
        return StatsSnapshot(
            tuple(self.completed), tuple(self.delegated), tuple(self.direct)
        )


class Funnel:
    """Fetch-and-add object combining concurrent deltas into batches.

    Parameters
    ----------
    m:
        Aggregators per sign bank.
    p:
        Maximum number of participating threads (dense ids ``0..p-1``).
    main:
        Underlying fetch-and-add object; a fresh zeroed
        :class:`~aggfunnel.core.HardwareCell` by default. Passing another
        funnel builds the recursive construction (see
        :func:`recursive_funnel`).
    router:
        Routing policy with ``route(tid, sign) -> index | DIRECT``;
        defaults to ``FixedM(m)``.
    """

    def __init__(self, m: int, p: int, main=None, router=None,
                 config: FunnelConfig | None = None, domain: EpochDomain | None = None):
        if m < 1:
            raise InvalidConfig(f"m must be >= 1, got {m}")
        if p < 1:
            raise InvalidConfig(f"p must be >= 1, got {p}")
        self.m = m
        self.p = p
        self.main = main if main is not None else HardwareCell(0)
        self.router = router if router is not None else FixedM(m)
        self.config = config if config is not None else FunnelConfig()
        self.domain = domain if domain is not None else EpochDomain(p)
        self.positive = [Aggregator(p) for _ in range(m)]
        self.negative = [Aggregator(p) for _ in range(m)]
        self.stats = FunnelStats(p)
        self.canary_violations: list = []    # list.append is atomic
        self.invariant_violations: list = []  # populated in debug mode only

        cfg = self.config
        self._debug = cfg.debug
        self._no_trim = cfg.no_trim
        self._trim_threshold = cfg.trim_threshold
        self._spin_limit = cfg.spin_limit
        self._yield_limit = cfg.yield_limit
        self._max_sleep = cfg.max_sleep_s
        self._completed = self.stats.completed
        self._delegated = self.stats.delegated
        self._direct = self.stats.direct

    # ------------------------------------------------------------------ api

    def fetch_add(self, tid: int, df: int) -> int:
        if df == 0:
            return self.main.read()
        sign = 1 if df > 0 else -1
        index = self.router.route(tid, sign)
        if index is DIRECT:
            return self.fetch_add_direct(tid, df)
        if self._debug and not 0 <= index < self.m:
            raise InvalidConfig(f"router produced index {index} for m={self.m}")
        a = (self.positive if sign > 0 else self.negative)[index]

        domain = self.domain
        domain.pin(tid)
        announce = a.announce
        # Conservative pre-RMW bound: |value| only grows, and our slice key
        # will be at least the value at this instant. Guards the window
        # before the exact key is known so no trim can cut our batch.
        value = a.value
        announce[tid] = value if value >= 0 else -value

        lock = a.lock
        lock.acquire()
        a_before = a.value
        a.value = a_before + df
        lock.release()

        key = a_before if a_before >= 0 else -a_before
        announce[tid] = key

        last = a.last
        if abs(last.after) < key:
            last = self._wait(a, key)

        if last.after == a_before:
            result = self._publish(tid, a, a_before, last)
        else:
            batch = find_batch(last, a_before, self.canary_violations)
            result = batch.main_before + a_before - batch.before

        announce[tid] = IDLE
        domain.unpin(tid)
        self._completed[tid] += 1
        return result

    def fetch_add_direct(self, tid: int, df: int) -> int:
        result = self.main.fetch_add_direct(tid, df)
        self._direct[tid] += 1
        return result

    def read(self) -> int:
        return self.main.read()

    def compare_swap(self, old: int, new: int) -> bool:
        return self.main.compare_swap(old, new)

    # ------------------------------------------------------------- internals

    def _wait(self, a: Aggregator, key: int) -> Batch:
        """Block until the published chain covers ``key``; return the head seen."""
        spins = self._spin_limit
        yields = self._yield_limit
        sleep_s = 0.000001
        max_sleep = self._max_sleep
        last = a.last
        while abs(last.after) < key:
            if spins > 0:
                spins -= 1
            elif yields > 0:
                yields -= 1
                time.sleep(0)
            else:
                time.sleep(sleep_s)
                if sleep_s < max_sleep:
                    sleep_s = min(sleep_s * 2.0, max_sleep)
            last = a.last
        return last

    def _publish(self, tid: int, a: Aggregator, a_before: int, last: Batch) -> int:
        a_after = a.value
        main_before = self.main.fetch_add(tid, a_after - a_before)
        batch = Batch(a_before, a_after, main_before, last)
        if self._debug:
            self._check_publication(a, batch, last)
        a.last = batch  # publication point: waiters and walkers see it now
        self._delegated[tid] += 1
        a.chain_len += 1
        if not self._no_trim and a.chain_len > self._trim_threshold:
            self._trim(a, batch)
        return main_before

    def _check_publication(self, a: Aggregator, batch: Batch, last: Batch) -> None:
        clauses = []
        if abs(a.value) < abs(batch.after):
            clauses.append("value-covers-after")
        if abs(batch.after) <= abs(batch.before):
            clauses.append("non-empty-slice")
        if batch.before != last.after:
            clauses.append("tiles-previous")
        if clauses:
            self.invariant_violations.append(
                (tuple(clauses), batch.before, batch.after, last.after)
            )

    def _trim(self, a: Aggregator, newest: Batch) -> None:
        """Sever and retire every batch no in-flight op can still target.

        Keeps the suffix from ``newest`` down to the oldest batch whose
        ``after`` exceeds the minimum announced key bound; everything older
        is unlinked as one piece and retired to the epoch domain. Serialized
        per aggregator by a non-blocking lock — a delegate that loses the
        race simply leaves the work to the next one.
        """
        if not a.trim_lock.acquire(blocking=False):
            return
        try:
            low = min(a.announce)
            node = newest
            kept = 1
            prev = node.previous
            while prev is not None and abs(prev.after) > low:
                node = prev
                kept += 1
                prev = node.previous
            a.chain_len = kept
            if prev is None:
                return
            node.previous = None  # unlink before retire
            domain = self.domain
            while prev is not None:
                nxt = prev.previous
                domain.retire(prev)
                prev = nxt
            domain.try_advance()
        finally:
            a.trim_lock.release()


def recursive_funnel(levels, p: int, router_factory=None,
                     config: FunnelConfig | None = None, main=None) -> Funnel:
    """Stack funnels so each level's Main is the next funnel inward.

    ``levels`` lists aggregator counts outermost-first, e.g. ``[4, 2]`` puts
    4 aggregators per sign in front of an inner funnel with 2 per sign in
    front of the hardware cell. A delegate's batch application at one level
    enters the next level as an ordinary funneled operation, so contention
    on the innermost cell drops multiplicatively. ``fetch_add_direct``
    bypasses every level.

    ``router_factory(m, level)`` builds each level's policy (``FixedM`` by
    default); ``level`` 0 is outermost.
    """
    levels = list(levels)
    if not levels:
        raise InvalidConfig("levels must name at least one aggregator count")
    for m in levels:
        if m < 1:
            raise InvalidConfig(f"every level needs m >= 1, got {m}")
    obj = main if main is not None else HardwareCell(0)
    for level in range(len(levels) - 1, -1, -1):
        m = levels[level]
        router = router_factory(m, level) if router_factory is not None else FixedM(m)
        obj = Funnel(m, p, main=obj, router=router, config=config)
    return obj
