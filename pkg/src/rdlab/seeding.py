"""Seed derivation and an order-preserving parallel map.

Every Monte Carlo work item (one outer replicate, one simulation trial) owns
its own generator, derived from the master seed and a fixed integer key::

    child = SeedSequence(entropy=master_seed, spawn_key=(stream, *key))

so a result depends only on (master_seed, stream, key) and never on how the
items are distributed across workers.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

# stream tags; never renumber, CSV regression snapshots depend on them
STREAM_MI = 1
STREAM_NOISE_GAP = 2
STREAM_EXPERIMENT = 3
STREAM_NOISY_MI = 4
STREAM_MISC = 99

MAX_SEED = 2**64 - 1


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def child_rng(master_seed: int, stream: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=check_seed(master_seed),
                                spawn_key=(int(stream), *(int(k) for k in key)))
    return np.random.default_rng(ss)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> list[R]:
    """``[fn(x) for x in items]``, optionally spread over a process pool.

    Output order always matches input order. ``fn`` must be picklable when
    ``workers > 1``.
    """
    items = list(items)
    if workers is None or workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    workers = min(int(workers), os.cpu_count() or 1, len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    chunksize = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))

