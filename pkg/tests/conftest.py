import sys
import threading

import pytest


@pytest.fixture
def fast_switch():
    """Interleave threads aggressively for the duration of a test.

    The default 5 ms switch interval lets a thread finish thousands of ops
    per quantum, which hides races; 10 µs approximates real contention.
    """
    saved = sys.getswitchinterval()
    sys.setswitchinterval(1e-5)
    yield
    sys.setswitchinterval(saved)


@pytest.fixture
def run_threads():
    """Run ``worker(tid)`` on ``count`` barrier-synchronized threads and
    re-raise the first worker exception in the test thread."""

    def run(worker, count: int, timeout: float = 180.0):
        barrier = threading.Barrier(count)
        errors: list = []

        def wrapped(tid: int) -> None:
            try:
                barrier.wait()
                worker(tid)
            except BaseException as exc:  # noqa: BLE001 - reported to the test
                errors.append((tid, exc))

        threads = [
            threading.Thread(target=wrapped, args=(tid,), name=f"test-worker-{tid}")
            for tid in range(count)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join(timeout)
            assert not t.is_alive(), f"worker {t.name} did not finish in {timeout}s"
        if errors:
            tid, exc = errors[0]
            raise AssertionError(f"worker {tid} failed: {exc!r}") from exc

    return run
