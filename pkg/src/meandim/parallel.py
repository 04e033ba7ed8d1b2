"""Bounded deterministic parallelism.

MEANDIM_THREADS caps the worker count. Work items carry their index and
results are reduced in index order, so output bytes never depend on the
thread count; per-item seeds are derived from a root seed by the callers.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from .errors import PreconditionError


def thread_budget(requested: int | None = None) -> int:
    cap = os.environ.get("MEANDIM_THREADS")
    try:
        cap = int(cap) if cap is not None else None
    except ValueError:
        raise PreconditionError(f"MEANDIM_THREADS must be an integer, got {cap!r}")
    workers = requested if requested is not None else (cap or 1)
    if cap is not None:
        workers = min(workers, cap)
    return max(1, workers)


def deterministic_map(fn, items, threads: int | None = None):
    """Map fn over items, returning results in item order."""
    workers = thread_budget(threads)
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
