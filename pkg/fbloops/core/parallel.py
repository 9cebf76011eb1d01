"""Deterministic chunked worker pool for per-sample Monte Carlo work."""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional

import numpy as np
import structlog

from fbloops.core.config import settings

logger = structlog.get_logger(__name__)


def chunk_bounds(
    n_items: int, chunk_size: Optional[int] = None
) -> list[tuple[int, int]]:
    """Split ``range(n_items)`` into fixed-size ``(start, stop)`` chunks."""
    size = chunk_size or settings.CHUNK_SIZE
    return [(start, min(start + size, n_items)) for start in range(0, n_items, size)]


def map_chunks(
    func: Callable[[int, int], np.ndarray],
    n_items: int,
    threads: Optional[int] = None,
    chunk_size: Optional[int] = None,
) -> list[np.ndarray]:
    """
    Apply ``func(start, stop)`` to every chunk and return results in chunk order.

    Chunk boundaries depend only on ``chunk_size``; the thread count changes
    scheduling, never the arithmetic, so outputs are bit-identical across
    ``threads`` values.

    Args:
        func: Work function over a half-open index range
        n_items: Total number of items
        threads: Worker count (defaults to ``settings.THREADS``)
        chunk_size: Items per chunk (defaults to ``settings.CHUNK_SIZE``)

    Returns:
        list: One result per chunk, ordered by start index
    """
    bounds = chunk_bounds(n_items, chunk_size)
    workers = max(1, int(threads or settings.THREADS))
    if workers == 1 or len(bounds) <= 1:
        return [func(start, stop) for start, stop in bounds]

    logger.debug("parallel_map", chunks=len(bounds), threads=workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(func, start, stop) for start, stop in bounds]
        return [future.result() for future in futures]
