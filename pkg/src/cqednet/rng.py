"""Seeded, worker-count-independent random streams.

Work is cut into fixed-size shards; shard k draws from
PCG64(SeedSequence(seed, spawn_key=(k,))).  Results are merged in shard
order, so the output depends only on (seed, shard size), never on how many
processes ran the shards.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Sequence

import numpy as np

ALGORITHM_ID = "numpy-PCG64/SeedSequence(seed,spawn_key=(shard,))"


def shard_rng(seed: int, shard: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(shard),))))


def shard_sizes(total: int, shard_size: int) -> list[int]:
    if total <= 0:
        raise ValueError("total must be positive")
    full, rest = divmod(int(total), int(shard_size))
    return [shard_size] * full + ([rest] if rest else [])


def _run(job):
    fn, args, seed, k = job
    return fn(args, shard_rng(seed, k))


def map_shards(fn: Callable[[Any, np.random.Generator], Any], shard_args: Sequence, seed: int,
               workers: int = 1) -> list:
    """Apply fn(args, rng) to every shard; returns results in shard order."""
    jobs = [(fn, a, seed, k) for k, a in enumerate(shard_args)]
    if workers <= 1 or len(jobs) <= 1:
        return [_run(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_run, jobs))
