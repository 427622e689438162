"""Dense-matrix numerics: SVD, Walsh-Hadamard transform, spectral norm.

Matrices throughout the package are plain C-contiguous float64 numpy
arrays; :func:`as_matrix` is the single validation gate that rejects
empty or non-finite input.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SvdError",
    "SvdResult",
    "as_matrix",
    "svd",
    "fwht",
    "hadamard_sign",
    "spectral_norm",
]

# Fixed start seed for the power-iteration vector, so spectral_norm is a
# pure function of its input.
_POWER_ITERATION_SEED = 1729


class SvdError(RuntimeError):
    """The underlying decomposition failed to converge."""


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return ``a`` as a C-contiguous float64 2-D array.

    Raises ValueError for anything that is not a non-empty 2-D array of
    finite values, so NaN/Inf never enter the numeric paths.
    """
    m = np.ascontiguousarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if m.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.isfinite(m).all():
        raise ValueError(f"{name} contains non-finite entries")
    return m


@dataclass(frozen=True, eq=False)
class SvdResult:
    """Thin SVD factors; ``sigma`` is sorted non-increasing."""

    u: np.ndarray
    sigma: np.ndarray
    vt: np.ndarray


def svd(m) -> SvdResult:
    """Thin SVD of a dense matrix.

    Returns k = min(rows, cols) singular values in non-increasing order
    together with the corresponding singular-vector factors.  A LAPACK
    convergence failure surfaces as :class:`SvdError` rather than
    silently returning garbage.
    """
    a = as_matrix(m)
    try:
        u, sigma, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdError(
            f"SVD did not converge on a {a.shape[0]}x{a.shape[1]} matrix"
        ) from exc
    return SvdResult(u=u, sigma=sigma, vt=vt)


def _butterfly_axis0(a: np.ndarray) -> None:
    """Unnormalized in-place Walsh-Hadamard butterflies along axis 0.

    ``a`` must be C-contiguous with a power-of-two leading dimension.
    Runs the classic O(m log m) schedule, vectorized over the trailing
    axes.
    """
    if not a.flags.c_contiguous:
        raise ValueError("butterfly target must be C-contiguous")
    m = a.shape[0]
    h = 1
    while h < m:
        view = a.reshape(m // (2 * h), 2, h, -1)
        top = view[:, 0].copy()
        view[:, 0] += view[:, 1]
        np.subtract(top, view[:, 1], out=view[:, 1])
        h *= 2


def fwht(v) -> np.ndarray:
    """Normalized Walsh-Hadamard transform of a length 2**b vector.

    Orthonormal and self-inverse: ``fwht(fwht(v))`` recovers ``v`` and
    the Euclidean norm is preserved.
    """
    x = np.array(v, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"fwht expects a vector, got shape {x.shape}")
    m = x.shape[0]
    if m == 0 or m & (m - 1):
        raise ValueError(f"fwht length must be a power of two, got {m}")
    if not np.isfinite(x).all():
        raise ValueError("fwht input contains non-finite entries")
    _butterfly_axis0(x)
    x *= 1.0 / math.sqrt(m)
    return x


def hadamard_sign(i: int, j: int) -> int:
    """Sign of entry (i, j) of the unnormalized Hadamard matrix.

    For zero-based indices this is +1 when popcount(i & j) is even and
    -1 when odd, matching the recursive [[H, H], [H, -H]] construction.
    """
    i = int(i)
    j = int(j)
    if i < 0 or j < 0:
        raise ValueError("hadamard_sign indices must be non-negative")
    return -1 if (i & j).bit_count() & 1 else 1


def spectral_norm(m, tol: float = 1e-9, max_iter: int = 10_000) -> float:
    """Largest absolute eigenvalue of a symmetric matrix.

    Power iteration with a start vector drawn from a fixed seed, so the
    result is a deterministic function of the input.  Iteration stops
    when successive estimates agree to within ``tol`` relative, or after
    ``max_iter`` sweeps.  The zero matrix maps to 0.0.
    """
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"spectral_norm needs a square matrix, got {a.shape}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = a.shape[0]
    v = np.random.default_rng(_POWER_ITERATION_SEED).standard_normal(n)
    v /= np.linalg.norm(v)
    estimate = 0.0
    previous = math.inf
    for _ in range(max_iter):
        w = a @ v
        estimate = float(np.linalg.norm(w))
        if estimate == 0.0:
            return 0.0
        if abs(estimate - previous) < tol * estimate:
            break
        previous = estimate
        v = w / estimate
    return estimate
