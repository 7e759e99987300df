"""Hierarchical, reproducible RNG derivation.

Every source of randomness in the package is a numpy Generator derived
from a tuple of integer/string parts via SeedSequence, so adding trials,
changing the participation rate, or reordering unrelated work never
perturbs an existing stream.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 63) - 1


def _as_entropy(part) -> int:
    if isinstance(part, str):
        return int.from_bytes(part.encode("utf-8"), "big")
    return int(part) & _MASK


def derive_seed(*parts) -> int:
    """Collapse (ints and/or str tags) into a single stable 63-bit seed."""
    seq = np.random.SeedSequence([_as_entropy(p) for p in parts])
    return int(seq.generate_state(1, np.uint64)[0]) & _MASK


def derive_rng(*parts) -> np.random.Generator:
    """Generator seeded by the same derivation as derive_seed."""
    seq = np.random.SeedSequence([_as_entropy(p) for p in parts])
    return np.random.default_rng(seq)
