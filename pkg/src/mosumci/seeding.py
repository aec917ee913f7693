"""Deterministic per-task random streams.

Every replicate (bootstrap draw, simulation replication, sampler chunk) gets
its own generator built from ``SeedSequence(master_seed, spawn_key=(index,))``.
The stream of task ``i`` therefore depends only on ``(master_seed, i)`` and
never on the order in which tasks execute or on how they are spread over
worker threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

MASK64 = (1 << 64) - 1


def fresh_seed() -> int:
    """Draw a 64-bit master seed from system entropy."""
    return int(np.random.SeedSequence().generate_state(1, np.uint64)[0])


def task_rng(master_seed: int, index: int, *path: int) -> np.random.Generator:
    """Generator for task ``index`` (optionally nested by ``path``)."""
    ss = np.random.SeedSequence(int(master_seed) & MASK64, spawn_key=(int(index), *map(int, path)))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(master_seed: int, index: int, *path: int) -> int:
    """A 64-bit child seed for task ``index``; used to hand seeds to sub-runs."""
    ss = np.random.SeedSequence(int(master_seed) & MASK64, spawn_key=(int(index), *map(int, path)))
    return int(ss.generate_state(1, np.uint64)[0])


def ordered_map(func: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """``[func(x) for x in items]``, optionally on a thread pool.

    Results come back in input order whatever the thread count.
    """
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=int(threads)) as pool:
        return list(pool.map(func, items))


def chunked(n_items: int, chunk: int) -> Sequence[range]:
    return [range(s, min(s + chunk, n_items)) for s in range(0, n_items, chunk)]
