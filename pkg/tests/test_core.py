"""Cell semantics, wrap arithmetic, and thread registration.

The compare-and-swap race expectation is derived by exhaustive interleaving:
each CAS is a single atomic step (it runs under the cell lock), so the only
interleavings of two racing calls are the two orderings. Both orderings give
exactly one winner; the threaded test then checks the implementation against
that oracle many times.
"""

import itertools

import pytest
from hypothesis import given, strategies as st

from aggfunnel import (
    HardwareCell,
    InvalidConfig,
    RegistryFull,
    S64_MAX,
    S64_MIN,
    ThreadRegistry,
    wrap_s64,
)


# --------------------------------------------------------------------- oracle

def cas_race_outcomes(initial: int, casA: tuple, casB: tuple) -> set:
    """All result pairs (A, B) over exhaustive interleavings of two atomic
    compare-and-swaps applied to ``initial``."""
    outcomes = set()
    for order in itertools.permutations("AB"):
        state = initial
        results = {}
        for name in order:
            old, new = casA if name == "A" else casB
            if state == old:
                state = new
                results[name] = True
            else:
                results[name] = False
        outcomes.add((results["A"], results["B"]))
    return outcomes


def test_cas_race_oracle_exactly_one_winner():
    # Derived expectation: both orderings leave exactly one winner.
    outcomes = cas_race_outcomes(5, (5, 8), (5, 9))
    assert outcomes == {(True, False), (False, True)}


# ----------------------------------------------------------------------- cell

def test_fetch_add_returns_prior_value():
    cell = HardwareCell(5)
    assert cell.fetch_add(0, 11) == 5
    assert cell.read() == 16


def test_fetch_add_direct_is_the_same_operation():
    cell = HardwareCell(5)
    assert cell.fetch_add_direct(3, 11) == 5
    assert cell.read() == 16


def test_zero_delta_is_a_read():
    cell = HardwareCell(42)
    assert cell.fetch_add(0, 0) == 42
    assert cell.read() == 42


def test_negative_deltas():
    cell = HardwareCell(10)
    assert cell.fetch_add(0, -25) == 10
    assert cell.read() == -15


def test_compare_swap_success_and_failure():
    cell = HardwareCell(5)
    assert cell.compare_swap(5, 9) is True
    assert cell.read() == 9
    assert cell.compare_swap(5, 7) is False
    assert cell.read() == 9


def test_wrap_at_max():
    cell = HardwareCell(S64_MAX)
    assert cell.fetch_add(0, 1) == S64_MAX
    assert cell.read() == S64_MIN


def test_wrap_at_min():
    cell = HardwareCell(S64_MIN)
    assert cell.fetch_add(0, -1) == S64_MIN
    assert cell.read() == S64_MAX


@given(st.integers(min_value=S64_MIN, max_value=S64_MAX),
       st.integers(min_value=-(1 << 62), max_value=1 << 62))
def test_wrap_matches_twos_complement_reference(value, df):
    # Reference: bias into unsigned space, reduce mod 2^64, un-bias.
    expected = ((value + df + (1 << 63)) % (1 << 64)) - (1 << 63)
    assert wrap_s64(value + df) == expected


@given(st.integers(min_value=S64_MIN, max_value=S64_MAX))
def test_wrap_is_identity_in_range(value):
    assert wrap_s64(value) == value


def test_cell_fetch_add_wraps_like_reference():
    cell = HardwareCell(S64_MAX - 3)
    cell.fetch_add(0, 10)
    assert cell.read() == wrap_s64(S64_MAX - 3 + 10)


def test_racing_cas_has_exactly_one_winner(fast_switch, run_threads):
    oracle = cas_race_outcomes(5, (5, 8), (5, 9))
    for trial in range(200):
        cell = HardwareCell(5)
        results = [None, None]

        def worker(tid):
            results[tid] = cell.compare_swap(5, 8 + tid)

        run_threads(worker, 2)
        assert tuple(results) in oracle, f"trial {trial}: {results}"
        assert cell.read() == (8 if results[0] else 9)


def test_concurrent_fetch_add_conserves_sum(fast_switch, run_threads):
    cell = HardwareCell(0)
    per_thread = 5000
    returns = [[] for _ in range(4)]

    def worker(tid):
        append = returns[tid].append
        for i in range(per_thread):
            append(cell.fetch_add(tid, 1))

    run_threads(worker, 4)
    assert cell.read() == 4 * per_thread
    seen = sorted(v for r in returns for v in r)
    assert seen == list(range(4 * per_thread))


# ------------------------------------------------------------------- registry

def test_registry_assigns_dense_ids():
    reg = ThreadRegistry(4)
    assert reg.register() == 0
    assert reg.register() == 0  # idempotent per thread
    assert reg.current() == 0
    assert reg.registered == 1


def test_registry_rejects_bad_size():
    with pytest.raises(InvalidConfig):
        ThreadRegistry(0)


def test_registry_concurrent_registration(fast_switch, run_threads):
    p = 8
    reg = ThreadRegistry(p)
    ids = [None] * p

    def worker(slot):
        ids[slot] = reg.register()
        # re-registering from the same thread must return the same id
        assert reg.register() == ids[slot]

    run_threads(worker, p)
    assert sorted(ids) == list(range(p))


def test_registry_overflow_raises(run_threads):
    reg = ThreadRegistry(2)
    outcomes = []

    def worker(_slot):
        try:
            outcomes.append(("ok", reg.register()))
        except RegistryFull:
            outcomes.append(("full", None))

    run_threads(worker, 3)
    kinds = sorted(k for k, _ in outcomes)
    assert kinds == ["full", "ok", "ok"]
    ids = sorted(i for k, i in outcomes if k == "ok")
    assert ids == [0, 1]


def test_current_is_none_before_registration():
    reg = ThreadRegistry(1)
    assert reg.current() is None
