"""Deterministic randomness.

All randomness in the library flows through numpy's PCG64 bit generator,
seeded with 64-bit integers. Sub-seeds (per variant, per sample) are derived
with SplitMix64 so that files generated from a given seed are reproducible
byte-for-byte across platforms and runs. `derive_seed(seed, i)` is exactly
the i-th output of the reference SplitMix64 sequence whose state starts at
`seed`.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64(state: int) -> int:
    """SplitMix64 finalizer: a 64-bit bijective mix of the given state."""
    z = state & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Derive the sub-seed for stream `index` of master `seed`.

    Injective in `index` for a fixed seed, so sub-streams never collide.
    """
    if index < 0:
        raise ValueError(f"index must be >= 0, got {index}")
    state = (seed + (index + 1) * _GOLDEN) & _MASK64
    return splitmix64(state)


def make_rng(seed: int) -> np.random.Generator:
    """A fresh PCG64 generator for the given 64-bit seed."""
    return np.random.Generator(np.random.PCG64(seed & _MASK64))
