"""Seeded random streams.

Every generator is a numpy ``PCG64`` keyed by a master seed plus a tuple of
stream ids, built through ``SeedSequence(seed, spawn_key=...)``.  Distinct
id tuples give statistically independent streams, so instance generation,
gauge choice and each annealing repetition never share random numbers.
"""
from __future__ import annotations

import numpy as np

# first element of every spawn key
STREAM_INSTANCE = 0
STREAM_GAUGE = 1
STREAM_ANNEAL = 2
STREAM_GAP = 3


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(ss))


def anneal_rng(seed: int, instance_id: int = 0, gauge_id: int = 0, rep: int = 0) -> np.random.Generator:
    return make_rng(seed, STREAM_ANNEAL, instance_id, gauge_id, rep)
