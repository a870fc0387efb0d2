import threading

import pytest

from cli.exit_codes import register_exit_codes
from deform.errors import ResidualNonzero
from numlab.errors import PoleHit
from shared import run_ids
from shared.errors import CheckFailed, ExitCode, UsageError, exit_code_for
from shared.logging_config import configure_structlog
from shared.workers import WorkerPool, map_ordered


def test_run_id_is_bound_for_each_test():
    assert run_ids.get_run_id().startswith("test-")


def test_run_id_reaches_worker_threads():
    expected = run_ids.get_run_id()
    with WorkerPool(4, name="ids") as pool:
        seen = pool.map_ordered(lambda _: run_ids.get_run_id(), range(8))
    assert seen == [expected] * 8


def test_map_ordered_keeps_input_order():
    def slow_square(x):
        threading.Event().wait(0.001 * (5 - x))
        return x * x

    with WorkerPool(3, name="order") as pool:
        assert pool.map_ordered(slow_square, range(5)) == [0, 1, 4, 9, 16]
    assert map_ordered(slow_square, range(3)) == [0, 1, 4]


def test_single_worker_runs_inline():
    with WorkerPool(1) as pool:
        assert pool._executor is None
        assert pool.map_ordered(str, [1, 2]) == ["1", "2"]


@pytest.mark.parametrize("exc,expected", [
    (UsageError("bad flag"), ExitCode.USAGE),
    (CheckFailed("jacobi", "nonzero"), ExitCode.RESIDUAL_NONZERO),
    (CheckFailed("drift", "1e-3", numeric=True), ExitCode.TOLERANCE),
    (ResidualNonzero("T2", 3, "w0"), ExitCode.RESIDUAL_NONZERO),
    (PoleHit("theta_H", 1.0), ExitCode.TOLERANCE),
])
def test_exit_code_table(exc, expected):
    register_exit_codes()
    exit_code, report = exit_code_for(exc)
    assert exit_code == expected
    assert report.exit_code == int(expected)
    assert report.error == type(exc).__name__


def test_unregistered_errors_are_not_mapped():
    with pytest.raises(KeyError):
        exit_code_for(RuntimeError("boom"))


def test_unknown_log_level():
    with pytest.raises(ValueError):
        configure_structlog("chatty")
