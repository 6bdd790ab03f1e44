"""FIFO MPMC queue over an infinite array simulated by a segment list.

Enqueuers and dequeuers each draw tickets from a fetch-and-add index (Head
for dequeuers, Tail for enqueuers) and meet at the array cell named by the
ticket. The indices are pluggable :class:`~aggfunnel.core.FaaObject`\\ s, so
the queue runs identically over a raw hardware cell or a funnel.

Cell protocol (one dict entry per cell; absence is the empty state ⊥):

  * enqueuer:  ⊥ -> item      (setdefault; fails if the cell was poisoned)
  * dequeuer:  item -> taken  (claim via setdefault, then overwrite)
  * dequeuer:  ⊥ -> taken     (poison: the racing enqueuer must retry)

``dict.setdefault`` with an int key is a single atomic operation under the
GIL — it is the compare-and-swap of this protocol.

Segments are fixed-size, never reused, and linked forward only; the chain is
extended under a per-segment lock. Head/tail segment hints make ticket
location O(1) amortized; hints only ever advance (guarded by one rarely-taken
lock) and a fully consumed segment is unlinked from the hints *before* being
retired to the epoch domain. Reclamation poisons the segment (canary flag);
any later touch of a reclaimed segment is recorded in
``canary_violations`` — a correct interleaving never records one, because
every operation works under an epoch pin taken before it read its hints.

Dequeue returns :data:`EMPTY` when the head index has reached the tail
index; on claiming a poisoned cell it re-checks emptiness and retries.
"""

from __future__ import annotations

import threading

from .core import HardwareCell, InvalidConfig
from .reclaim import EpochDomain

__all__ = ["EMPTY", "Segment", "SegQueue"]


class _Sentinel:
    __slots__ = ("_name",)

    def __init__(self, name: str):
        self._name = name

    def __repr__(self) -> str:
        return self._name


#: Returned by :meth:`SegQueue.dequeue` when the queue is empty.
EMPTY = _Sentinel("Empty")
#: Cell state after a dequeuer consumed or poisoned it (the ⊤ encoding).
_TAKEN = _Sentinel("Taken")


class Segment:
    """One fixed-size slice of the infinite array."""

    __slots__ = ("base", "cells", "next", "lock", "retired")

    def __init__(self, base: int):
        self.base = base
        self.cells: dict = {}
        self.next: Segment | None = None
        self.lock = threading.Lock()
        self.retired = False

    def reclaim(self) -> None:
        self.retired = True


class SegQueue:
    """Unbounded FIFO queue with pluggable fetch-and-add indices.

    Parameters
    ----------
    p:
        Maximum participating threads (dense ids), sizing the epoch domain.
    head, tail:
        Fetch-and-add objects for the two ticket counters; fresh
        :class:`HardwareCell`\\ s by default. Both must start at 0.
    segment_size:
        Cells per segment; segments are retired once fully consumed.
    """

    def __init__(self, p: int, head=None, tail=None, segment_size: int = 1024,
                 domain: EpochDomain | None = None):
        if p < 1:
            raise InvalidConfig(f"p must be >= 1, got {p}")
        if segment_size < 2:
            raise InvalidConfig(f"segment_size must be >= 2, got {segment_size}")
        self.p = p
        self.segment_size = segment_size
        self.head = head if head is not None else HardwareCell(0)
        self.tail = tail if tail is not None else HardwareCell(0)
        if self.head.read() != 0 or self.tail.read() != 0:
            raise InvalidConfig("head and tail indices must start at 0")
        self.domain = domain if domain is not None else EpochDomain(p)
        first = Segment(0)
        self._head_seg = first
        self._tail_seg = first
        self._hint_lock = threading.Lock()
        self.canary_violations: list = []  # list.append is atomic

    # ------------------------------------------------------------------ api

    def enqueue(self, tid: int, item) -> None:
        """Append ``item`` (any object except the reserved sentinels)."""
        if item is EMPTY or item is _TAKEN:
            raise InvalidConfig("the Empty/Taken sentinels cannot be enqueued")
        domain = self.domain
        tail = self.tail
        size = self.segment_size
        domain.pin(tid)
        try:
            while True:
                # Hint must be read before the ticket so its base can never
                # pass the ticket's segment.
                start = self._tail_seg
                ticket = tail.fetch_add(tid, 1)
                seg = self._locate(start, ticket)
                if ticket - seg.base == size - 1:
                    self._advance_tail_hint(seg)
                prior = seg.cells.setdefault(ticket, item)
                if prior is not _TAKEN:
                    return
                # A dequeuer overtook this ticket and poisoned the cell;
                # draw a fresh ticket.
        finally:
            domain.unpin(tid)

    def dequeue(self, tid: int):
        """Pop the oldest item, or :data:`EMPTY` when head has met tail."""
        domain = self.domain
        head = self.head
        tail = self.tail
        size = self.segment_size
        domain.pin(tid)
        try:
            while True:
                if head.read() >= tail.read():
                    return EMPTY
                start = self._head_seg
                ticket = head.fetch_add(tid, 1)
                seg = self._locate(start, ticket)
                prior = seg.cells.setdefault(ticket, _TAKEN)
                took = prior is not _TAKEN
                if took:
                    seg.cells[ticket] = _TAKEN  # consume: item -> taken
                if ticket - seg.base == size - 1:
                    self._retire_segment(seg)
                if took:
                    return prior
                # Poisoned an unfilled cell; re-check emptiness and retry.
        finally:
            domain.unpin(tid)

    # ------------------------------------------------------------- internals

    def _locate(self, seg: Segment, index: int) -> Segment:
        """Walk (extending as needed) to the segment containing ``index``.

        ``seg.base <= index`` holds because hints are read before tickets
        are drawn; walking forward therefore always terminates.
        """
        size = self.segment_size
        while index >= seg.base + size:
            seg = self._ensure_next(seg)
        if seg.retired:
            self.canary_violations.append(("locate", index))
        return seg

    def _ensure_next(self, seg: Segment) -> Segment:
        nxt = seg.next
        if nxt is None:
            with seg.lock:
                nxt = seg.next
                if nxt is None:
                    nxt = Segment(seg.base + self.segment_size)
                    seg.next = nxt
        return nxt

    def _advance_tail_hint(self, seg: Segment) -> None:
        nxt = self._ensure_next(seg)
        with self._hint_lock:
            if self._tail_seg.base < nxt.base:
                self._tail_seg = nxt

    def _retire_segment(self, seg: Segment) -> None:
        """Every cell of ``seg`` has been visited by a dequeuer: unlink it
        from both hints (monotonically), then hand it to the epoch domain."""
        nxt = self._ensure_next(seg)
        with self._hint_lock:
            if self._head_seg.base <= seg.base:
                self._head_seg = nxt
            if self._tail_seg.base <= seg.base:
                self._tail_seg = nxt
        self.domain.retire(seg)
        self.domain.try_advance()

    # ------------------------------------------------------------ inspection

    def drain_remaining(self) -> list:
        """Quiescent-only: items enqueued but never dequeued, oldest first."""
        items = []
        seg = self._head_seg
        while seg is not None:
            for index in sorted(seg.cells):
                value = seg.cells[index]
                if value is not _TAKEN:
                    items.append((index, value))
            seg = seg.next
        items.sort()
        return [value for _, value in items]

    def live_segments(self) -> int:
        """Quiescent-only: segments reachable from the head hint."""
        count = 0
        seg = self._head_seg
        while seg is not None:
            count += 1
            seg = seg.next
        return count
