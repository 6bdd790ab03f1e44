"""Shared fetch-and-add object surface plus thread identity.

Every combinable object in this package — the hardware-style cell, the
funnel, the recursive funnel — exposes the same four linearizable operations
over a signed 64-bit value:

    fetch_add(tid, df)          read-modify-write, returns the prior value
    fetch_add_direct(tid, df)   same contract, bypassing any batching layer
    read()                      plain load; fetch_add(tid, 0) is equivalent
    compare_swap(old, new)      single-word CAS, returns success

``tid`` is a dense thread id in ``[0, p)`` (see :class:`ThreadRegistry`); the
hardware cell ignores it so the object kinds are interchangeable wherever a
fetch-and-add word is needed.

CPython notes: the per-cell lock plays the role of the native RMW
instruction, and a bare attribute load is atomic under the GIL, so ``read``
takes no lock.
"""

from __future__ import annotations

import threading
from typing import Protocol, runtime_checkable

__all__ = [
    "S64_MAX",
    "S64_MIN",
    "wrap_s64",
    "FaaObject",
    "HardwareCell",
    "ThreadRegistry",
    "RegistryFull",
    "InvalidConfig",
    "CorrectnessError",
]

S64_MAX = (1 << 63) - 1
S64_MIN = -(1 << 63)
_U64 = 1 << 64


class RegistryFull(RuntimeError):
    """More threads tried to register than the registry was sized for."""


class InvalidConfig(ValueError):
    """A configuration value violates a documented precondition."""


class CorrectnessError(RuntimeError):
    """A correctness check over a finished run failed."""


def wrap_s64(value: int) -> int:
    """Reduce an unbounded int to signed 64-bit two's complement."""
    value &= _U64 - 1
    return value - _U64 if value > S64_MAX else value


@runtime_checkable
class FaaObject(Protocol):
    """Structural type for anything usable as a fetch-and-add word."""

    def fetch_add(self, tid: int, df: int) -> int: ...

    def fetch_add_direct(self, tid: int, df: int) -> int: ...

    def read(self) -> int: ...

    def compare_swap(self, old: int, new: int) -> bool: ...


class HardwareCell:
    """Signed 64-bit cell updated only through atomic read-modify-write.

    The lock stands in for the hardware RMW instruction: acquire, mutate,
    release is one linearization point. Overflow wraps two's complement.
    """

    __slots__ = ("_lock", "_value")

    def __init__(self, initial: int = 0):
        self._lock = threading.Lock()
        self._value = wrap_s64(initial)

    def fetch_add(self, tid: int, df: int) -> int:
        with self._lock:
            old = self._value
            new = old + df
            if new > S64_MAX or new < S64_MIN:
                new = wrap_s64(new)
            self._value = new
            return old

    # Direct and funneled application are the same thing at the hardware level.
    fetch_add_direct = fetch_add

    def read(self) -> int:
        return self._value

    def compare_swap(self, old: int, new: int) -> bool:
        with self._lock:
            if self._value != old:
                return False
            self._value = wrap_s64(new)
            return True

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"HardwareCell({self._value})"


class ThreadRegistry:
    """Hands out dense thread ids ``0..p-1``, idempotently per thread.

    A thread's first :meth:`register` call assigns the next free id; repeat
    calls from the same thread return the same id. Registration past
    ``max_threads`` raises :class:`RegistryFull`.
    """

    __slots__ = ("max_threads", "_lock", "_next", "_local")

    def __init__(self, max_threads: int):
        if max_threads < 1:
            raise InvalidConfig(f"max_threads must be >= 1, got {max_threads}")
        self.max_threads = max_threads
        self._lock = threading.Lock()
        self._next = 0
        self._local = threading.local()

    def register(self) -> int:
        tid = getattr(self._local, "tid", None)
        if tid is not None:
            return tid
        with self._lock:
            if self._next >= self.max_threads:
                raise RegistryFull(
                    f"registry sized for {self.max_threads} threads is full"
                )
            tid = self._next
            self._next = tid + 1
        self._local.tid = tid
        return tid

    def current(self) -> int | None:
        """The calling thread's id, or None if it never registered."""
        return getattr(self._local, "tid", None)

    @property
    def registered(self) -> int:
        return self._next
