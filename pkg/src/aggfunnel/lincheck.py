"""History recording and linearizability checking.

A history is a set of operation intervals — per-thread invocation/response
timestamp pairs with the operation's arguments and observed response. The
bounded checker searches for a witness: a total order of the operations that
(a) replays correctly through a sequential specification and (b) respects
real time (an operation that responded before another was invoked must come
first). Accepted witnesses are re-verified by replay before being returned.

The search follows the classic approach of extending a linearization prefix
only with *minimal* operations — those no unfinished operation precedes in
real time — and memoizes (sequential state, completed set) pairs, which
keeps the bounded search exact. Histories beyond :data:`DEFAULT_BOUND`
operations are refused up front; use :func:`check_fetch_inc` for the
linear-time special case of pure fetch-and-increment histories of any size.

Recording is per-thread (no cross-thread synchronization on the hot path).
Coarse clocks can tie consecutive ``monotonic_ns`` reads; the recorder nudges
timestamps forward to keep per-thread intervals strictly ordered, which only
widens intervals and therefore never fabricates a real-time ordering.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

from .core import wrap_s64

__all__ = [
    "OP_FETCH_ADD",
    "OP_FETCH_ADD_DIRECT",
    "OP_READ",
    "OP_COMPARE_SWAP",
    "OP_ENQUEUE",
    "OP_DEQUEUE",
    "DEFAULT_BOUND",
    "Op",
    "History",
    "HistoryRecorder",
    "SeqSpec",
    "faa_spec",
    "fifo_spec",
    "CheckResult",
    "check_linearizable",
    "check_fetch_inc",
    "validate_batch_chain",
    "dump_history",
    "load_history",
    "MalformedHistory",
    "HistoryTooLarge",
]

OP_FETCH_ADD = "fetchadd"
OP_FETCH_ADD_DIRECT = "fetchadddirect"
OP_READ = "read"
OP_COMPARE_SWAP = "compareswap"
OP_ENQUEUE = "enqueue"
OP_DEQUEUE = "dequeue"

#: The exact checker refuses histories with more operations than this.
DEFAULT_BOUND = 12


class MalformedHistory(ValueError):
    """The history violates well-formedness (per-thread interval rules)."""


class HistoryTooLarge(ValueError):
    """The history exceeds the exact checker's documented bound."""


class Op(NamedTuple):
    tid: int
    kind: str
    args: tuple
    value: object
    inv: int
    resp: int


class History:
    """Operation intervals, globally sorted by invocation time."""

    __slots__ = ("ops",)

    def __init__(self, ops):
        self.ops = sorted(ops, key=lambda o: (o.inv, o.resp, o.tid))

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)

    def validate(self) -> None:
        """Raise :class:`MalformedHistory` unless per-thread ops are
        sequential: strictly positive intervals that never overlap."""
        per_thread: dict[int, list[Op]] = {}
        for op in self.ops:
            per_thread.setdefault(op.tid, []).append(op)
        for tid, ops in per_thread.items():
            prev = None
            for op in sorted(ops, key=lambda o: o.inv):
                if op.inv >= op.resp:
                    raise MalformedHistory(
                        f"thread {tid}: empty or inverted interval [{op.inv}, {op.resp}]"
                    )
                if prev is not None and op.inv <= prev.resp:
                    raise MalformedHistory(
                        f"thread {tid}: overlapping operations at {op.inv}"
                    )
                prev = op


class HistoryRecorder:
    """Per-thread buffers; merge with :meth:`history` after the run."""

    __slots__ = ("threads", "_bufs", "_last")

    def __init__(self, threads: int):
        self.threads = threads
        self._bufs: list[list] = [[] for _ in range(threads)]
        self._last = [0] * threads

    def record(self, tid: int, kind: str, args: tuple, value, inv: int, resp: int) -> None:
        last = self._last[tid]
        if inv <= last:
            inv = last + 1
        if resp <= inv:
            resp = inv + 1
        self._last[tid] = resp
        self._bufs[tid].append((kind, args, value, inv, resp))

    def history(self) -> History:
        ops = []
        for tid, buf in enumerate(self._bufs):
            for kind, args, value, inv, resp in buf:
                ops.append(Op(tid, kind, args, value, inv, resp))
        return History(ops)


@dataclass(frozen=True)
class SeqSpec:
    """A sequential specification: initial state plus a transition function.

    ``apply(state, kind, args) -> (new_state, response)``; states must be
    hashable (they key the checker's memo table).
    """

    initial: object
    apply: Callable


def faa_spec(initial: int = 0) -> SeqSpec:
    """Fetch-and-add word semantics over signed 64-bit wrap arithmetic."""

    def apply(state: int, kind: str, args: tuple):
        if kind == OP_FETCH_ADD or kind == OP_FETCH_ADD_DIRECT:
            return wrap_s64(state + args[0]), state
        if kind == OP_READ:
            return state, state
        if kind == OP_COMPARE_SWAP:
            old, new = args
            if state == old:
                return wrap_s64(new), True
            return state, False
        raise MalformedHistory(f"unknown faa op kind {kind!r}")

    return SeqSpec(wrap_s64(initial), apply)


def fifo_spec(empty_response, initial: tuple = ()) -> SeqSpec:
    """FIFO queue semantics; ``empty_response`` is what a failed dequeue
    returned in the history (pass the queue's Empty sentinel)."""

    def apply(state: tuple, kind: str, args: tuple):
        if kind == OP_ENQUEUE:
            return state + (args[0],), None
        if kind == OP_DEQUEUE:
            if state:
                return state[1:], state[0]
            return state, empty_response
        raise MalformedHistory(f"unknown fifo op kind {kind!r}")

    return SeqSpec(tuple(initial), apply)


@dataclass
class CheckResult:
    """Outcome of a history check; ``witness`` is op indices in accept order
    (or the longest consistent prefix found, on reject)."""

    accepted: bool
    witness: list
    reason: str = ""

    def __bool__(self) -> bool:
        return self.accepted


def _replay_verify(ops, order, spec) -> None:
    """Assert ``order`` is a genuine witness; raises AssertionError if not."""
    state = spec.initial
    for position, i in enumerate(order):
        op = ops[i]
        state, response = spec.apply(state, op.kind, op.args)
        assert response == op.value, (
            f"witness replay mismatch at position {position}: "
            f"expected {op.value!r}, spec produced {response!r}"
        )
    for earlier_pos in range(len(order)):
        for later_pos in range(earlier_pos + 1, len(order)):
            a = ops[order[earlier_pos]]
            b = ops[order[later_pos]]
            assert not b.resp < a.inv, (
                f"witness violates real time: op {order[later_pos]} responded "
                f"before op {order[earlier_pos]} was invoked"
            )


def check_linearizable(history: History, spec: SeqSpec,
                       bound: int = DEFAULT_BOUND) -> CheckResult:
    """Exact bounded check of ``history`` against ``spec``."""
    history.validate()
    ops = history.ops
    n = len(ops)
    if n > bound:
        raise HistoryTooLarge(f"{n} ops exceeds the exact-checker bound of {bound}")
    if n == 0:
        return CheckResult(True, [])

    memo: set = set()
    witness: list[int] = []
    best: list[int] = []

    def search(state, remaining: frozenset) -> bool:
        nonlocal best
        if not remaining:
            return True
        key = (state, remaining)
        if key in memo:
            return False
        min_resp = min(ops[i].resp for i in remaining)
        for i in sorted(remaining):
            op = ops[i]
            if min_resp < op.inv:
                continue  # some pending op already responded: not minimal
            new_state, response = spec.apply(state, op.kind, op.args)
            if response != op.value:
                continue
            witness.append(i)
            if len(witness) > len(best):
                best = witness.copy()
            if search(new_state, remaining - {i}):
                return True
            witness.pop()
        memo.add(key)
        return False

    if search(spec.initial, frozenset(range(n))):
        _replay_verify(ops, witness, spec)
        return CheckResult(True, list(witness))
    return CheckResult(
        False,
        best,
        f"no linearization exists; longest consistent prefix has {len(best)} of {n} ops",
    )


def check_fetch_inc(history: History) -> CheckResult:
    """Linear-time check for histories of pure ``fetch_add(1)`` ops.

    Linearizable iff responses are exactly ``{0..n-1}`` and sorting by
    response value never contradicts real time, which a single sweep over
    invocation order verifies: the largest value among already-responded ops
    must stay below every later-invoked op's value.
    """
    history.validate()
    ops = history.ops
    n = len(ops)
    for op in ops:
        if op.kind not in (OP_FETCH_ADD, OP_FETCH_ADD_DIRECT) or op.args[0] != 1:
            return CheckResult(False, [], f"non fetch-and-increment op {op.kind}{op.args}")
    values = sorted(op.value for op in ops)
    if values != list(range(n)):
        from collections import Counter

        counts = Counter(values)
        missing = sorted(set(range(n)) - counts.keys())[:5]
        dupes = sorted(v for v, c in counts.items() if c > 1)[:5]
        return CheckResult(
            False, [],
            f"responses are not exactly 0..{n - 1} (missing {missing}, duplicated {dupes})",
        )
    by_inv = ops  # History sorts by invocation already
    by_resp = sorted(range(n), key=lambda i: ops[i].resp)
    j = 0
    max_responded = -1
    culprit = -1
    for op in by_inv:
        while j < n and ops[by_resp[j]].resp < op.inv:
            candidate = ops[by_resp[j]].value
            if candidate > max_responded:
                max_responded = candidate
                culprit = by_resp[j]
            j += 1
        if max_responded > op.value:
            return CheckResult(
                False, [],
                f"real-time violation: value {max_responded} (op {culprit}) responded "
                f"before the op that returned {op.value} was invoked",
            )
    order = sorted(range(n), key=lambda i: ops[i].value)
    return CheckResult(True, order)


def validate_batch_chain(aggregator) -> CheckResult:
    """Check the published chain of one aggregator against its invariants.

    Intended for quiescent snapshots (no concurrent publications) of an
    untrimmed chain: from the newest batch down, every batch must cover a
    non-empty slice, tile exactly onto its predecessor, and bottom out at
    the sentinel; the aggregator value must cover the newest ``after``.
    """
    value = aggregator.value
    last = aggregator.last
    if abs(value) < abs(last.after):
        return CheckResult(False, [], "value-covers-after")
    batch = last
    while batch.previous is not None:
        if abs(batch.after) <= abs(batch.before):
            return CheckResult(False, [], "non-empty-slice")
        if batch.before != batch.previous.after:
            return CheckResult(False, [], "tiles-previous")
        batch = batch.previous
    if batch.after != 0:
        return CheckResult(False, [], "chain-bottom-not-sentinel")
    return CheckResult(True, [])


# ----------------------------------------------------------------- dump/load

_INV = "inv"
_RES = "res"


def _encode_value(value) -> int:
    if value is True:
        return 1
    if value is False:
        return 0
    if value is None:
        return 0
    return int(value)


def dump_history(history: History, fileobj) -> None:
    """Write ``ts thread kind op arg1 arg2 value`` lines, sorted by ts.

    Covers the fetch-and-add op vocabulary (integer args/results; compare
    and swap responses encode as 1/0).
    """
    lines = []
    for i, op in enumerate(history.ops):
        a1 = op.args[0] if len(op.args) > 0 else 0
        a2 = op.args[1] if len(op.args) > 1 else 0
        lines.append((op.inv, op.tid, _INV, op.kind, a1, a2, 0))
        lines.append((op.resp, op.tid, _RES, op.kind, a1, a2, _encode_value(op.value)))
    lines.sort()
    for ts, tid, kind, name, a1, a2, value in lines:
        fileobj.write(f"{ts} {tid} {kind} {name} {a1} {a2} {value}\n")


def load_history(fileobj) -> History:
    """Parse the :func:`dump_history` format back into a history."""
    pending: dict[int, tuple] = {}
    ops: list[Op] = []
    for lineno, line in enumerate(fileobj, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 7:
            raise MalformedHistory(f"line {lineno}: expected 7 fields, got {len(parts)}")
        try:
            ts, tid = int(parts[0]), int(parts[1])
            kind, name = parts[2], parts[3]
            a1, a2, value = int(parts[4]), int(parts[5]), int(parts[6])
        except ValueError as exc:
            raise MalformedHistory(f"line {lineno}: {exc}") from None
        if kind == _INV:
            if tid in pending:
                raise MalformedHistory(f"line {lineno}: thread {tid} invoked twice")
            pending[tid] = (name, (a1, a2), ts)
        elif kind == _RES:
            if tid not in pending:
                raise MalformedHistory(f"line {lineno}: response without invocation on thread {tid}")
            name0, args, inv = pending.pop(tid)
            if name0 != name:
                raise MalformedHistory(f"line {lineno}: response op {name} does not match invocation {name0}")
            recorded: object = value
            if name == OP_COMPARE_SWAP:
                recorded = bool(value)
            if name in (OP_FETCH_ADD, OP_FETCH_ADD_DIRECT):
                args = (a1,)
            elif name == OP_READ:
                args = ()
            ops.append(Op(tid, name, args, recorded, inv, ts))
        else:
            raise MalformedHistory(f"line {lineno}: unknown event kind {kind!r}")
    if pending:
        raise MalformedHistory(f"unresponded invocations on threads {sorted(pending)}")
    return History(ops)
