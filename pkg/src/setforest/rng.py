"""Deterministic seed derivation.

Every stochastic component (bootstrap draws, per-node feature subsets,
candidate-term sampling, fold shuffles, hash seeds) owns a generator whose
seed is derived from the run seed with ``derive_seed``. Results therefore
never depend on call order, and adding parallelism cannot change them.

The derivation is one splitmix64 step per key: ``state = mix(seed)``, then
``state = mix(state ^ key)`` for each key. splitmix64 is the standard
finalizer (golden-ratio increment, two xor-multiply rounds, final xor-shift).
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(value: int) -> int:
    """One splitmix64 step; maps a 64-bit int to a well-mixed 64-bit int."""
    value = (value + _GOLDEN) & _MASK64
    z = value
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *keys: int) -> int:
    """Fold integer keys into ``seed``, one splitmix64 step per key."""
    state = splitmix64(seed & _MASK64)
    for key in keys:
        state = splitmix64(state ^ (key & _MASK64))
    return state


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """A PCG64 generator seeded with ``derive_seed(seed, *keys)``."""
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *keys)))
