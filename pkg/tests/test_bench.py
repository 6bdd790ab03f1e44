"""Benchmark harness: short end-to-end runs, CSV schema, verification.

Timed runs here use tiny durations — the point is that the machinery
(warmup latching, measurement windows, result verification, CSV output)
works, not that the numbers are meaningful. All multi-thread configs pass
``oversubscribe`` so the suite runs on any host.
"""

import csv
import sys

import pytest

from aggfunnel import CorrectnessError, Funnel, HardwareCell, InvalidConfig
from aggfunnel.bench import (
    FAA_COLUMNS,
    FaaBenchConfig,
    IMPLS,
    LincheckConfig,
    PATTERNS,
    QUEUE_COLUMNS,
    QueueBenchConfig,
    append_csv,
    build_faa_object,
    faa_rows,
    mean_std,
    queue_rows,
    run_faa_bench,
    run_lincheck_stress,
    run_queue_bench,
    _switch_interval,
)
from aggfunnel.routing import FixedM, PriorityWrapped


SHORT = dict(duration_s=0.15, reps=2, work_mean_cycles=0.0,
             oversubscribe=True, threads=2)


# ------------------------------------------------------------------- schemas

def test_csv_column_schemas_are_frozen():
    assert FAA_COLUMNS == [
        "impl", "m", "d", "threads", "ratio_pct", "work_cycles", "rep",
        "duration_s", "total_ops", "throughput", "avg_batch", "fairness",
        "hp_throughput", "lp_throughput",
    ]
    assert QUEUE_COLUMNS == [
        "queue_impl", "idx_impl", "m", "threads", "pattern", "initial_size",
        "work_cycles", "rep", "duration_s", "total_ops", "throughput",
    ]


def test_result_rows_match_columns(tmp_path):
    results = run_faa_bench(FaaBenchConfig(m=2, **SHORT))
    rows = faa_rows(results)
    assert all(len(row) == len(FAA_COLUMNS) for row in rows)
    path = tmp_path / "faa.csv"
    append_csv(str(path), FAA_COLUMNS, rows)
    append_csv(str(path), FAA_COLUMNS, rows)  # append run: no second header
    with open(path, newline="") as f:
        lines = list(csv.reader(f))
    assert lines[0] == FAA_COLUMNS
    assert len(lines) == 1 + 2 * len(rows)
    assert sum(1 for line in lines if line == FAA_COLUMNS) == 1
    # numeric fields parse back
    for line in lines[1:]:
        int(line[FAA_COLUMNS.index("total_ops")])
        float(line[FAA_COLUMNS.index("throughput")])
        float(line[FAA_COLUMNS.index("avg_batch")])


# -------------------------------------------------------------------- builder

def test_build_hardware():
    assert isinstance(build_faa_object("hardware", 6, 8), HardwareCell)


def test_build_flat_funnel():
    funnel = build_faa_object("aggfunnel", 3, 8)
    assert isinstance(funnel, Funnel) and funnel.m == 3
    assert isinstance(funnel.main, HardwareCell)
    assert isinstance(funnel.router, FixedM)


def test_build_flat_funnel_with_priority():
    funnel = build_faa_object("aggfunnel", 3, 8, direct_threads=2)
    assert isinstance(funnel.router, PriorityWrapped)


def test_build_recursive_levels():
    funnel = build_faa_object("aggfunnel-recursive", 2, 8)
    assert funnel.m == 4            # ceil(8 / 2) outermost
    inner = funnel.main
    assert isinstance(inner, Funnel) and inner.m == 2
    assert isinstance(inner.main, HardwareCell)


def test_build_recursive_priority_wraps_outer_only():
    funnel = build_faa_object("aggfunnel-recursive", 2, 8, direct_threads=1)
    assert isinstance(funnel.router, PriorityWrapped)
    assert isinstance(funnel.main.router, FixedM)


def test_build_rejects_unknown():
    with pytest.raises(InvalidConfig):
        build_faa_object("soft", 1, 1)


# ------------------------------------------------------------------ faa bench

def test_faa_bench_short_run_funnel():
    results = run_faa_bench(FaaBenchConfig(m=2, debug=True, **SHORT))
    assert len(results) == 2
    assert [r.rep for r in results] == [0, 1]
    for r in results:
        assert r.impl == "aggfunnel" and r.m == 2 and r.threads == 2
        assert r.total_ops > 0
        assert r.throughput > 0
        assert 0.1 < r.duration_s < 0.3
        assert r.avg_batch >= 1.0
        assert 0.0 <= r.fairness <= 1.0


def test_faa_bench_hardware_reports_unit_batches():
    results = run_faa_bench(FaaBenchConfig(impl="hardware", **SHORT))
    assert all(r.avg_batch == 1.0 for r in results)


def test_faa_bench_recursive_impl_runs():
    config = FaaBenchConfig(impl="aggfunnel-recursive", m=2, debug=True,
                            duration_s=0.15, reps=1, work_mean_cycles=0.0,
                            oversubscribe=True, threads=4)
    results = run_faa_bench(config)
    assert results[0].total_ops > 0


def test_faa_bench_priority_split_accounts_all_ops():
    config = FaaBenchConfig(m=1, direct_threads=1, duration_s=0.2, reps=1,
                            work_mean_cycles=0.0, oversubscribe=True, threads=2)
    r = run_faa_bench(config)[0]
    assert r.d == 1
    assert r.hp_throughput > 0 and r.lp_throughput > 0
    assert abs((r.hp_throughput + r.lp_throughput) - r.throughput) < 1e-6


def test_faa_bench_mixed_sign_and_reads():
    config = FaaBenchConfig(m=2, ratio_pct=60, mixed_sign=True, debug=True, **SHORT)
    assert run_faa_bench(config)[0].total_ops > 0


@pytest.mark.parametrize("kwargs", [
    dict(impl="bogus"),
    dict(m=0),
    dict(threads=0),
    dict(direct_threads=3, threads=2, oversubscribe=True),
    dict(ratio_pct=101),
    dict(duration_s=0.0),
    dict(reps=0),
    dict(pin="corner"),
    dict(threads=4096),  # exceeds any host without oversubscribe
])
def test_faa_config_validation(kwargs):
    base = dict(duration_s=1.0, reps=1)
    base.update(kwargs)
    with pytest.raises(InvalidConfig):
        FaaBenchConfig(**base).validate()


# ---------------------------------------------------------------- queue bench

@pytest.mark.parametrize("pattern", PATTERNS)
def test_queue_bench_short_run(pattern):
    config = QueueBenchConfig(pattern=pattern, segment_size=64,
                              duration_s=0.15, reps=1, work_mean_cycles=0.0,
                              oversubscribe=True, threads=2)
    results = run_queue_bench(config)
    assert results[0].total_ops > 0
    assert results[0].queue_impl == "segqueue"
    rows = queue_rows(results)
    assert all(len(row) == len(QUEUE_COLUMNS) for row in rows)


def test_queue_bench_funnel_index_and_preload():
    config = QueueBenchConfig(idx_impl="aggfunnel", m=2, initial_size=10,
                              segment_size=64, duration_s=0.15, reps=1,
                              work_mean_cycles=0.0, oversubscribe=True, threads=2)
    results = run_queue_bench(config)
    assert results[0].idx_impl == "aggfunnel"
    assert results[0].initial_size == 10


@pytest.mark.parametrize("kwargs", [
    dict(idx_impl="bogus"),
    dict(pattern="zigzag"),
    dict(segment_size=1),
    dict(initial_size=-1),
])
def test_queue_config_validation(kwargs):
    base = dict(duration_s=1.0, reps=1, oversubscribe=True)
    base.update(kwargs)
    with pytest.raises(InvalidConfig):
        QueueBenchConfig(**base).validate()


# ------------------------------------------------------------ lincheck stress

def test_lincheck_stress_funnel_accepts_everything():
    report = run_lincheck_stress(LincheckConfig(m=2, threads=2, ops_per_thread=2,
                                                histories=30, seed=3))
    assert report.ok
    assert report.histories == 30
    assert report.accepted == 30
    assert report.invariant_violations == 0


def test_lincheck_stress_hardware_baseline():
    report = run_lincheck_stress(LincheckConfig(impl="hardware", threads=2,
                                                ops_per_thread=2, histories=10))
    assert report.ok


def test_lincheck_config_rejects_oversized_histories():
    with pytest.raises(InvalidConfig):
        LincheckConfig(threads=4, ops_per_thread=4).validate()


# -------------------------------------------------------------------- helpers

def test_mean_std_goldens():
    assert mean_std([1.0, 2.0, 3.0]) == (2.0, 1.0)
    assert mean_std([5.0]) == (5.0, 0.0)
    assert mean_std([]) == (0.0, 0.0)


def test_switch_interval_restores():
    before = sys.getswitchinterval()
    with _switch_interval(before / 2):
        assert sys.getswitchinterval() == before / 2
    assert sys.getswitchinterval() == before
