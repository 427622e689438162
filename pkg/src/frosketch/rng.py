"""Deterministic derivation of child seeds for nested randomness."""
from __future__ import annotations

import numpy as np

__all__ = ["derive_seed"]


def derive_seed(master: int, *path: int) -> int:
    """Derive a 64-bit child seed from a master seed and an index path.

    Built on numpy's SeedSequence spawn keys, whose hashing is part of
    the documented API and stable across platforms, so derived streams
    are reproducible everywhere.
    """
    master = int(master)
    if master < 0:
        raise ValueError("master seed must be non-negative")
    key = tuple(int(p) for p in path)
    if any(p < 0 for p in key):
        raise ValueError("seed path entries must be non-negative")
    ss = np.random.SeedSequence(master, spawn_key=key)
    return int(ss.generate_state(1, np.uint64)[0])
