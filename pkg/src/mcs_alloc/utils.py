"""
Utility functions for mcs-alloc.

Worker pools for embarrassingly parallel batches (route precomputation, sweep grid
points) and a wall-clock stopwatch for run reports.
"""

from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from typing import Callable, Iterable, Iterator, TypeVar
import logging
import os
import time

logger = logging.getLogger(__name__)

WORKERS_ENV = "MCS_ALLOC_WORKERS"

T = TypeVar("T")
R = TypeVar("R")


def worker_count(workers: int | None = None) -> int:
    """
    Resolve the number of workers.

    Explicit argument wins, then the MCS_ALLOC_WORKERS environment variable, then 1.
    """
    if workers is None:
        raw = os.environ.get(WORKERS_ENV, "1")
        try:
            workers = int(raw)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}")
    if workers < 1:
        raise ValueError(f"workers must be positive, got {workers}")
    return workers


def batched(items: list[T], batch_size: int) -> Iterator[list[T]]:
    """Split items into consecutive batches of at most batch_size"""
    if not isinstance(batch_size, int) or batch_size <= 0:
        raise ValueError(f"batch_size must be a positive integer, got {batch_size}")
    for i in range(0, len(items), batch_size):
        yield items[i:i + batch_size]


def parallel_map(func: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    """
    Order-preserving map over items.

    Runs in-process when one worker is configured; otherwise fans out to a process pool.
    func must be a picklable top-level callable in the parallel case.

    Example:
        costs = parallel_map(route_costs_for, participants, workers=4)
    """
    items = list(items)
    workers = min(worker_count(workers), max(1, len(items)))
    if workers == 1:
        return [func(item) for item in items]

    logger.debug("parallel_map: %d items on %d workers", len(items), workers)
    chunksize = max(1, len(items) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items, chunksize=chunksize))


class Stopwatch:
    """Wall-clock timer reporting milliseconds"""

    def __init__(self):
        self.start = time.perf_counter()
        self.elapsed_ms = 0.0

    def stop(self) -> float:
        self.elapsed_ms = (time.perf_counter() - self.start) * 1000.0
        return self.elapsed_ms


@contextmanager
def timed() -> Iterator[Stopwatch]:
    """
    Context manager measuring wall-clock runtime.

    Example:
        with timed() as watch:
            solve(...)
        print(watch.elapsed_ms)
    """
    watch = Stopwatch()
    try:
        yield watch
    finally:
        watch.stop()
