"""Worker-count resolution and an order-preserving parallel map.

All reductions in the package happen in the caller, in ascending work-unit
order, so results never depend on how many workers produced the pieces.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Iterator, TypeVar

from .errors import ValidationError

ENV_THREADS = "DELTA_LAB_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def resolve_workers(workers: int | None = None) -> int:
    """Flag value, else ``$DELTA_LAB_THREADS``, else the machine's CPU count."""
    if workers is None:
        env = os.environ.get(ENV_THREADS)
        if env:
            try:
                workers = int(env)
            except ValueError:
                raise ValidationError(f"{ENV_THREADS} must be an integer, got {env!r}") from None
        else:
            workers = os.cpu_count() or 1
    if workers < 1:
        raise ValidationError(f"workers must be >= 1, got {workers}")
    return workers


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> Iterator[R]:
    """Like ``map`` but spread over a thread pool; yields results in input order.

    The numba kernels release the GIL, so threads give real concurrency.
    """
    if workers <= 1:
        yield from map(fn, items)
        return
    # bounded look-ahead: results can be large arrays
    window = 2 * workers
    with ThreadPoolExecutor(max_workers=workers) as pool:
        pending = []
        for item in items:
            pending.append(pool.submit(fn, item))
            if len(pending) >= window:
                yield pending.pop(0).result()
        for fut in pending:
            yield fut.result()
