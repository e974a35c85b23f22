"""Seeded random streams.

Every Monte Carlo unit of work (a block of protocol rounds, a percolation
trial) draws from a stream derived from ``(master seed, key...)`` alone, so
results never depend on how work is split across workers.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = ["stream", "trial_stream", "philox_key", "SEED_MAX"]

SEED_MAX = 2**64 - 1


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for sub-stream ``key`` of ``seed``."""
    seq = np.random.SeedSequence(_check_seed(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


@lru_cache(maxsize=256)
def philox_key(seed: int, key: tuple[int, ...] = ()) -> np.ndarray:
    """128-bit Philox key hashed from ``(seed, key)``."""
    seq = np.random.SeedSequence(_check_seed(seed), spawn_key=tuple(int(k) for k in key))
    out = seq.generate_state(2, dtype=np.uint64)
    out.flags.writeable = False
    return out


def trial_stream(seed: int, key: tuple[int, ...], trial: int) -> np.random.Generator:
    """Generator for one percolation trial.

    All trials of ``(seed, key)`` share a Philox key; trial ``k`` starts at
    counter ``(0, k, 0, 0)``, so trials never overlap unless one draws
    ``2**66`` numbers.  Cheaper than hashing a fresh seed per trial.
    """
    counter = np.array([0, int(trial), 0, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=philox_key(seed, tuple(key)), counter=counter))
