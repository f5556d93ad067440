"""Deterministic RNG construction.

All randomness in the package flows through here so that every seed is
explicit and every derived stream is reproducible. Seeds may be any Python
integers; they are masked to unsigned 64-bit words before feeding numpy's
SeedSequence (which rejects negatives).
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def seeded_rng(*parts: int) -> np.random.Generator:
    """PCG64 generator keyed on one or more integer seed parts."""
    entropy = [int(p) & _MASK64 for p in parts]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def derive_seeds(n: int, *parts: int) -> list[int]:
    """n stable child seeds for the stream identified by `parts`."""
    seq = np.random.SeedSequence([int(p) & _MASK64 for p in parts])
    return [int(s) for s in seq.generate_state(n, dtype=np.uint64)]
