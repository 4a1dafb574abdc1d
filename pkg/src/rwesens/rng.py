"""Seed derivation so every stochastic unit owns an independent, reproducible stream."""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

_threads = 1


def set_threads(n: int) -> None:
    global _threads
    _threads = max(1, int(n))


def get_threads() -> int:
    return _threads


def _key(k: int | str) -> int:
    if isinstance(k, str):
        return zlib.crc32(k.encode("utf-8"))
    return int(k)


def substream(seed: int, *keys: int | str) -> np.random.Generator:
    """Generator for the unit identified by ``keys`` under ``seed``.

    The stream depends only on (seed, keys), never on scheduling order.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(_key(k) for k in keys)))


def parallel_map(fn: Callable[[int], T], indices: Sequence[int], threads: int | None = None) -> list[T]:
    """Evaluate ``fn`` over ``indices`` and return results in index order."""
    threads = _threads if threads is None else threads
    if threads <= 1 or len(indices) < 2:
        return [fn(i) for i in indices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, indices))
