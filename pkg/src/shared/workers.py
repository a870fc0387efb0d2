import contextvars
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

import structlog

logger = structlog.get_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def default_workers() -> int:
    env = os.getenv("TODAKDV_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


class WorkerPool:
    """
    Bounded thread pool for independent pure computations.

    Results of `map_ordered` come back in input order, so any reduction the
    caller performs over them has a fixed association order and the output is
    identical for every pool size. Each task runs in a copy of the caller's
    context, which keeps the run id bound in structlog events.
    """
    def __init__(self, max_workers: Optional[int] = None, name: str = "pool"):
        self.max_workers = max_workers or default_workers()
        self.name = name
        self._executor: Optional[ThreadPoolExecutor] = None

    def __enter__(self) -> "WorkerPool":
        if self.max_workers > 1:
            self._executor = ThreadPoolExecutor(
                max_workers=self.max_workers, thread_name_prefix=self.name
            )
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()

    def shutdown(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def map_ordered(self, fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
        items = list(items)
        if self._executor is None or len(items) < 2:
            return [fn(item) for item in items]

        futures = [
            self._executor.submit(contextvars.copy_context().run, fn, item)
            for item in items
        ]
        logger.debug("Tasks submitted", pool=self.name, tasks=len(futures))
        return [future.result() for future in futures]


def map_ordered(
    fn: Callable[[T], R], items: Iterable[T], pool: Optional[WorkerPool] = None
) -> List[R]:
    """Run through `pool` when given, serially otherwise."""
    if pool is None:
        return [fn(item) for item in items]
    return pool.map_ordered(fn, items)
