"""Seeded random streams.

All randomness goes through numpy's Philox-4x64 counter-based bit generator,
so a seed names the same stream on every platform and numpy version that
ships Philox.
"""

from __future__ import annotations

import numpy as np

ALGORITHM = "philox4x64-10"


def make_rng(seed: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be a nonnegative integer")
    return np.random.Generator(np.random.Philox(int(seed)))
