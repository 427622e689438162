"""Frequent-directions sketch: a fixed ell-row summary of a row stream.

Rows are copied into the free rows of the sketch; whenever a row needs a
slot and none is free, :func:`shrink` condenses the sketch by an SVD and
subtracts the (ell/2)-th largest squared singular value from every
squared singular value, clamping at zero.  The classic deterministic
guarantee follows: the Gram mismatch ||A'A - B'B||_2 never exceeds
(2/ell) * ||A||_F^2, and A'A - B'B stays positive semidefinite.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrix import as_matrix, svd

__all__ = ["SketchState", "new_sketch", "shrink", "fd_insert"]


@dataclass(eq=False)
class SketchState:
    """Mutable sketch buffer.

    ``b`` is (ell, d); rows ``occupied`` .. ell are exactly zero.  The
    state is single-writer: concurrent insertion is not supported.
    """

    ell: int
    d: int
    b: np.ndarray
    occupied: int = 0

    def copy(self) -> "SketchState":
        return SketchState(ell=self.ell, d=self.d, b=self.b.copy(), occupied=self.occupied)


def new_sketch(ell: int, d: int) -> SketchState:
    """Allocate an empty sketch with ell rows (ell even) and d columns."""
    ell = int(ell)
    d = int(d)
    if ell < 2 or ell % 2:
        raise ValueError(f"ell must be an even integer >= 2, got {ell}")
    if d < 1:
        raise ValueError(f"d must be positive, got {d}")
    return SketchState(ell=ell, d=d, b=np.zeros((ell, d)), occupied=0)


def shrink(state: SketchState) -> SketchState:
    """Condense the sketch in place, freeing at least ell/2 rows.

    Decomposes b, subtracts the (ell/2)-th largest squared singular
    value (zero when fewer values exist), and rebuilds b as the shrunken
    diagonal times the right singular vectors.  Returns the same state.
    """
    res = svd(state.b) if state.occupied else None
    if res is None:
        return state
    half = state.ell // 2
    sigma2 = res.sigma**2
    delta = sigma2[half - 1] if sigma2.shape[0] >= half else 0.0
    shrunk = np.sqrt(np.maximum(sigma2 - delta, 0.0))
    k = shrunk.shape[0]
    state.b[:] = 0.0
    state.b[:k] = shrunk[:, None] * res.vt
    state.occupied = int(np.count_nonzero(shrunk))
    return state


def fd_insert(state: SketchState, rows) -> SketchState:
    """Insert rows in order, shrinking whenever the sketch runs out of
    free rows.  Equivalent to row-at-a-time insertion; splitting the
    input across calls cannot change the result."""
    rows = as_matrix(rows, name="rows")
    if rows.shape[1] != state.d:
        raise ValueError(
            f"rows have {rows.shape[1]} columns, sketch expects {state.d}"
        )
    i = 0
    n = rows.shape[0]
    while i < n:
        if state.occupied == state.ell:
            shrink(state)
        take = min(state.ell - state.occupied, n - i)
        state.b[state.occupied : state.occupied + take] = rows[i : i + take]
        state.occupied += take
        i += take
    return state
