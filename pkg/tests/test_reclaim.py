"""Epoch domain behavior: pinning, retiring, advancing, reclaiming."""

import pytest

from aggfunnel import EpochDomain, InvalidConfig, QUIESCENT


class Node:
    def __init__(self):
        self.retired = False

    def reclaim(self):
        self.retired = True


def test_pin_stores_epoch_and_nests():
    dom = EpochDomain(2)
    dom.pin(0)
    assert dom._pinned[0] == dom.epoch
    dom.pin(0)  # nested
    dom.unpin(0)
    assert dom._pinned[0] == dom.epoch  # still pinned at depth 1
    dom.unpin(0)
    assert dom._pinned[0] == QUIESCENT


def test_double_unpin_raises():
    dom = EpochDomain(1)
    dom.pin(0)
    dom.unpin(0)
    with pytest.raises(RuntimeError):
        dom.unpin(0)


def test_guard_context_manager():
    dom = EpochDomain(1)
    with dom.guard(0):
        assert dom._pinned[0] == dom.epoch
    assert dom._pinned[0] == QUIESCENT


def test_quiescent_domain_reclaims_after_two_advances():
    dom = EpochDomain(2)
    node = Node()
    dom.retire(node)
    assert dom.try_advance() is True
    assert not node.retired  # only one epoch has passed
    assert dom.try_advance() is True
    assert node.retired
    assert dom.pending == 0
    assert dom.reclaimed_count == 1


def test_three_advances_reclaim_everything():
    dom = EpochDomain(1)
    nodes = [Node() for _ in range(10)]
    for i, node in enumerate(nodes):
        dom.retire(node)
        if i % 3 == 0:
            dom.try_advance()
    for _ in range(3):
        dom.try_advance()
    assert all(node.retired for node in nodes)
    assert dom.pending == 0


def test_pinned_thread_blocks_advance():
    dom = EpochDomain(2)
    dom.pin(0)
    node = Node()
    dom.retire(node)
    dom.try_advance()  # may advance once: pinned thread is AT the current epoch
    stalled_epoch = dom.epoch
    # Thread 0 is now pinned at an older epoch, so no further advance.
    assert dom.try_advance() is False
    assert dom.epoch == stalled_epoch
    assert not node.retired
    dom.unpin(0)
    dom.try_advance()
    dom.try_advance()
    assert node.retired


def test_reclaim_requires_strictly_newer_pins():
    # A node retired at epoch e must survive while any thread stays pinned
    # at an epoch <= e.
    dom = EpochDomain(2)
    dom.pin(0)  # pinned at epoch 0
    node = Node()
    dom.retire(node)  # tagged epoch 0
    assert dom.try_advance() is True  # 0 -> 1 (pinned slot equals current)
    assert dom.try_advance() is False  # thread 0 still pinned at 0
    assert not node.retired
    dom.unpin(0)
    assert dom.try_advance() is True  # 1 -> 2, reclaims tag 0
    assert node.retired


def test_concurrent_pin_retire_advance_churn(fast_switch, run_threads):
    p = 4
    dom = EpochDomain(p)
    nodes = [[] for _ in range(p)]

    def worker(tid):
        for i in range(2000):
            dom.pin(tid)
            node = Node()
            # Simulate unlink-then-retire of a private node.
            dom.retire(node)
            nodes[tid].append(node)
            dom.unpin(tid)
            if i % 64 == 0:
                dom.try_advance()

    run_threads(worker, p)
    for _ in range(3):
        assert dom.try_advance() is True
    assert dom.pending == 0
    assert all(n.retired for buf in nodes for n in buf)


def test_rejects_bad_size():
    with pytest.raises(InvalidConfig):
        EpochDomain(0)
