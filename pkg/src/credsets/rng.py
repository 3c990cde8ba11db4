"""Seed derivation for replicated experiments.

Each replication gets its own generator seeded from a stable mix of the
master seed and integer keys, so replications can run in any order or
thread and still reproduce bit for bit.
"""

from __future__ import annotations

import numpy as np


def stable_mix(master_seed: int, *keys: int) -> int:
    """64-bit seed from (master_seed, *keys) via numpy's SeedSequence hash."""
    words = [int(master_seed)] + [int(k) for k in keys]
    if any(w < 0 for w in words):
        raise ValueError("seed words must be nonnegative")
    return int(np.random.SeedSequence(words).generate_state(1, np.uint64)[0])


def float_key(x: float) -> int:
    """Integer key from the bit pattern of a float, e.g. a sample size n."""
    return int(np.float64(x).view(np.uint64))


def replication_seed(master_seed: int, n: float, r: int) -> int:
    return stable_mix(master_seed, float_key(n), r)


def generator(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)
