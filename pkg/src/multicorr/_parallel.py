"""Fixed-chunk thread pool: the chunking never depends on the worker count,
so numeric output is identical for any ``threads`` value."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

CHUNK = 4096


def chunks(ns: np.ndarray, size: int = CHUNK) -> list[np.ndarray]:
    return [ns[i:i + size] for i in range(0, len(ns), size)] or [ns[:0]]


def ordered_map(fn: Callable[[np.ndarray], T], parts: Sequence, threads: int = 1) -> list[T]:
    if threads <= 1 or len(parts) <= 1:
        return [fn(p) for p in parts]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, parts))


def chunked_values(fn: Callable[[np.ndarray], np.ndarray], ns: np.ndarray, threads: int = 1,
                   size: int = CHUNK) -> np.ndarray:
    """Apply a vectorised ``fn`` to fixed-size chunks of ``ns`` and concatenate."""
    return np.concatenate(ordered_map(fn, chunks(ns, size), threads))
