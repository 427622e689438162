"""Synthetic benchmark data."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SynthConfig", "synth_lowrank", "synth_clusters"]


@dataclass(frozen=True)
class SynthConfig:
    """Noisy low-rank data: n x d rows with k dominant directions whose
    weights fall off linearly, plus Gaussian noise scaled by 1/gamma."""

    n: int
    d: int
    k: int = 10
    gamma: float = 10.0
    seed: int = 0


def synth_lowrank(cfg: SynthConfig) -> np.ndarray:
    """Draw A = P diag(lam) U + Z / gamma.

    P is (n, k) standard Gaussian, lam_i = 1 - (i-1)/k for i = 1..k, U
    is (k, d) with orthonormal rows from a seeded Gaussian, and Z is
    (n, d) standard Gaussian.  Fully determined by the config.
    """
    if cfg.n < 1 or cfg.d < 1:
        raise ValueError(f"n and d must be positive, got n={cfg.n}, d={cfg.d}")
    if not 1 <= cfg.k <= cfg.d:
        raise ValueError(f"k must lie in [1, {cfg.d}], got {cfg.k}")
    if cfg.gamma <= 0:
        raise ValueError(f"gamma must be positive, got {cfg.gamma}")
    rng = np.random.default_rng(cfg.seed)
    p = rng.standard_normal((cfg.n, cfg.k))
    q, _ = np.linalg.qr(rng.standard_normal((cfg.d, cfg.k)))
    u = np.ascontiguousarray(q.T)
    z = rng.standard_normal((cfg.n, cfg.d))
    lam = 1.0 - np.arange(cfg.k) / cfg.k
    return (p * lam) @ u + z / cfg.gamma


def synth_clusters(
    n: int,
    d: int,
    clusters: int = 10,
    seed: int = 0,
    center_scale: float = 0.5,
    noise: float = 1.0,
    noise_rank: int | None = None,
    mean_scale: float = 0.0,
) -> np.ndarray:
    """Gaussian mixture rows: cluster centers drawn at ``center_scale``
    per coordinate, random assignment, Gaussian spread around each
    center.

    With the default ``noise_rank=None`` the within-cluster spread is
    isotropic over all d coordinates.  Setting ``noise_rank=s`` confines
    it to a random s-dimensional subspace (orthonormal basis from a
    seeded Gaussian), which caps the overall data rank at
    ``clusters + s + 1`` — handy when the retrieval structure should be
    fully visible to a rank-r model.  ``mean_scale`` adds a common
    Gaussian offset to every row, mimicking uncentered feature data.
    """
    if n < 1 or d < 1 or clusters < 1:
        raise ValueError("n, d, and clusters must be positive")
    if noise_rank is not None and not 1 <= noise_rank <= d:
        raise ValueError(f"noise_rank must lie in [1, {d}], got {noise_rank}")
    rng = np.random.default_rng(seed)
    offset = rng.standard_normal(d) * mean_scale
    centers = rng.standard_normal((clusters, d)) * center_scale
    labels = rng.integers(0, clusters, size=n)
    if noise_rank is None:
        spread = rng.standard_normal((n, d)) * noise
    else:
        basis, _ = np.linalg.qr(rng.standard_normal((d, noise_rank)))
        spread = (rng.standard_normal((n, noise_rank)) * noise) @ basis.T
    return offset + centers[labels] + spread
