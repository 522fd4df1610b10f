"""Deterministic, splittable random-number streams.

Every stream is keyed by a single 64-bit seed.  Derived seeds (one per
Monte Carlo replication, one per grid cell) come from chaining a SplitMix64
finalizer over the parts, so the stream for replication r depends only on
``(master_seed, r)`` and not on scheduling order.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def mix_seed(*parts: int) -> int:
    """Fold integer parts into one well-mixed 64-bit seed."""
    state = 0
    for part in parts:
        state = _splitmix64((state ^ (int(part) & _MASK)) & _MASK)
    return state


def normal_stream(seed: int) -> np.random.Generator:
    """Generator whose ``standard_normal`` draws are reproducible per seed."""
    return np.random.Generator(np.random.PCG64(mix_seed(seed)))
