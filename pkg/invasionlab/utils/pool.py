"""Replica work pool: results always come back in submission order."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Iterator, TypeVar

__all__ = ["replica_map"]

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def replica_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> Iterator[R]:
    """Lazily map *fn* over *items* on ``threads`` worker processes.

    Output order follows input order whatever the completion order, so folds over
    the results are independent of the pool width. *fn* must be picklable
    (a module-level function or a :func:`functools.partial` of one).
    """
    if threads <= 1:
        yield from map(fn, items)
        return
    logger.debug("Starting a pool of %d workers", threads)
    with ProcessPoolExecutor(max_workers=threads) as pool:
        yield from pool.map(fn, items)
