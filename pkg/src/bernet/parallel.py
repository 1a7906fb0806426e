"""Deterministic fan-out of replicate batches over a thread pool.

Kernels release the GIL, so threads give real parallelism.  Work is cut
into chunks whose boundaries do not depend on the worker count, and results
are reassembled in chunk order, so output never depends on ``threads``.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 256


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get("BERNET_THREADS", "1") or 1)
    return max(1, int(threads))


def map_keys(func, keys: np.ndarray, threads: int | None = None, chunk: int = CHUNK):
    """Apply ``func`` to fixed-size slices of ``keys``; concatenate in order."""
    keys = np.asarray(keys, dtype=np.uint64)
    pieces = [keys[i:i + chunk] for i in range(0, keys.size, chunk)]
    if not pieces:
        return np.zeros(0, dtype=np.int64)
    threads = resolve_threads(threads)
    if threads == 1 or len(pieces) == 1:
        return np.concatenate([func(p) for p in pieces])
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return np.concatenate(list(pool.map(func, pieces)))


def map_items(func, items, threads: int | None = None) -> list:
    """Ordered map over arbitrary independent work items."""
    items = list(items)
    threads = resolve_threads(threads)
    if threads == 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))
