"""Keyed random streams.

Every stochastic decision is drawn from a generator derived solely from a
tuple of non-negative integers, so results never depend on call order or on
which thread evaluates what.
"""

from __future__ import annotations

import numpy as np


def keyed_rng(*key: int) -> np.random.Generator:
    """Counter-based (Philox) generator seeded by the integer key tuple."""
    words = [int(k) for k in key]
    if any(w < 0 for w in words):
        raise ValueError(f"stream key must be non-negative, got {key}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))
