"""Epoch-based reclamation for unlinked batch-chain and segment nodes.

Classic three-epoch scheme: threads pin the global epoch around any access to
shared nodes; unlinked nodes are retired tagged with the current epoch; a
retired node is reclaimed only once every pinned epoch is strictly newer than
its tag (quiescent threads don't block). ``try_advance`` is non-blocking —
if another thread is already advancing, it returns immediately.

Python's GC makes "free" a no-op, so reclamation here calls the node's
``reclaim()`` method, which poisons it. The poison flag acts as a canary:
data structures check it on traversal, so a use-after-reclaim is *detected*
rather than silently corrupting memory. A correct protocol never trips it.

Pins nest (depth-counted per thread); ``unpin`` below depth zero is a
programming error and raises.
"""

from __future__ import annotations

import threading
from collections import deque
from contextlib import contextmanager

from .core import InvalidConfig

__all__ = ["EpochDomain", "QUIESCENT"]

#: Pinned-slot value for a thread with no active pin.
QUIESCENT = -1


class EpochDomain:
    """A reclamation domain shared by the threads of one data structure."""

    __slots__ = ("p", "_epoch", "_pinned", "_depth", "_retired", "_advance_lock",
                 "reclaimed_count")

    def __init__(self, p: int):
        if p < 1:
            raise InvalidConfig(f"p must be >= 1, got {p}")
        self.p = p
        self._epoch = 0
        self._pinned = [QUIESCENT] * p
        self._depth = [0] * p
        self._retired: deque[tuple[int, object]] = deque()
        self._advance_lock = threading.Lock()
        self.reclaimed_count = 0

    @property
    def epoch(self) -> int:
        return self._epoch

    def pin(self, tid: int) -> None:
        depth = self._depth[tid]
        if depth == 0:
            self._pinned[tid] = self._epoch
        self._depth[tid] = depth + 1

    def unpin(self, tid: int) -> None:
        depth = self._depth[tid] - 1
        if depth < 0:
            raise RuntimeError(f"unbalanced unpin for thread {tid}")
        self._depth[tid] = depth
        if depth == 0:
            self._pinned[tid] = QUIESCENT

    @contextmanager
    def guard(self, tid: int):
        """Context-managed pin for non-hot-path callers."""
        self.pin(tid)
        try:
            yield self
        finally:
            self.unpin(tid)

    def retire(self, node) -> None:
        """Hand over an *already unlinked* node for deferred reclamation."""
        # deque.append is atomic; a stale epoch read only delays reclamation
        # on the safe side (the node was unlinked before this call, so any
        # thread that can still reach it pinned at or before this epoch).
        self._retired.append((self._epoch, node))

    def try_advance(self) -> bool:
        """Advance the epoch and reclaim what is provably unreachable.

        Returns False without blocking when another thread holds the advance
        lock or some pinned thread has not yet crossed the current epoch.
        """
        if not self._advance_lock.acquire(blocking=False):
            return False
        try:
            current = self._epoch
            pinned = self._pinned
            for tid in range(self.p):
                epoch = pinned[tid]
                if epoch != QUIESCENT and epoch != current:
                    return False
            self._epoch = current + 1
            # Safe set: retired tag <= current - 1, i.e. strictly older than
            # every possible pinned epoch from here on.
            retired = self._retired
            limit = current - 1
            while retired and retired[0][0] <= limit:
                _, node = retired.popleft()
                node.reclaim()
                self.reclaimed_count += 1
            return True
        finally:
            self._advance_lock.release()

    @property
    def pending(self) -> int:
        """Nodes retired but not yet reclaimed (approximate under races)."""
        return len(self._retired)
