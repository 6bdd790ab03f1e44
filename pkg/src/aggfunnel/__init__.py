"""Batched software fetch-and-add and friends.

Public surface: the hardware-style cell and funnel objects (interchangeable
fetch-and-add words), routing policies, epoch reclamation, the segment FIFO
queue, the linearizability harness, and the benchmark entry points.
"""

from .core import (
    CorrectnessError,
    FaaObject,
    HardwareCell,
    InvalidConfig,
    RegistryFull,
    S64_MAX,
    S64_MIN,
    ThreadRegistry,
    wrap_s64,
)
from .funnel import (
    Aggregator,
    Batch,
    CorruptedBatchChain,
    Funnel,
    FunnelConfig,
    FunnelStats,
    StatsSnapshot,
    find_batch,
    recursive_funnel,
)
from .lincheck import (
    CheckResult,
    DEFAULT_BOUND,
    History,
    HistoryRecorder,
    HistoryTooLarge,
    MalformedHistory,
    Op,
    OP_COMPARE_SWAP,
    OP_DEQUEUE,
    OP_ENQUEUE,
    OP_FETCH_ADD,
    OP_FETCH_ADD_DIRECT,
    OP_READ,
    SeqSpec,
    check_fetch_inc,
    check_linearizable,
    dump_history,
    faa_spec,
    fifo_spec,
    load_history,
    validate_batch_chain,
)
from .reclaim import EpochDomain, QUIESCENT
from .routing import (
    DIRECT,
    EvenSpread,
    FixedM,
    NEGATIVE,
    POSITIVE,
    PriorityWrapped,
    RandomRoute,
    route_even_spread,
    route_fixed_m,
    route_priority,
)
from .segqueue import EMPTY, SegQueue, Segment
from .workload import WorkloadSpec, WorkExecutor, geometric_cycles, op_stream

__version__ = "0.1.0"

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
    "Batch",
    "Aggregator",
    "Funnel",
    "FunnelConfig",
    "FunnelStats",
    "StatsSnapshot",
    "CorruptedBatchChain",
    "find_batch",
    "recursive_funnel",
    "EpochDomain",
    "QUIESCENT",
    "DIRECT",
    "POSITIVE",
    "NEGATIVE",
    "EvenSpread",
    "FixedM",
    "RandomRoute",
    "PriorityWrapped",
    "route_even_spread",
    "route_fixed_m",
    "route_priority",
    "EMPTY",
    "SegQueue",
    "Segment",
    "History",
    "HistoryRecorder",
    "Op",
    "OP_FETCH_ADD",
    "OP_FETCH_ADD_DIRECT",
    "OP_READ",
    "OP_COMPARE_SWAP",
    "OP_ENQUEUE",
    "OP_DEQUEUE",
    "DEFAULT_BOUND",
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
    "WorkloadSpec",
    "WorkExecutor",
    "geometric_cycles",
    "op_stream",
]
