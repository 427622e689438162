"""Seeded subsampled randomized Hadamard transform.

An operator compresses m rows down to q rows by flipping row signs,
applying the normalized Walsh-Hadamard transform, and keeping q rows
sampled without replacement, scaled by sqrt(m/q) so squared norms are
preserved in expectation.

:func:`apply` materializes the whole m-row input and is the reference
path.  :func:`apply_blocked` consumes the rows as a stream and never
holds more than one p-row block plus the q output rows, where p is the
largest power of two <= q.  It exploits the Kronecker factorization of
the Hadamard matrix: transform each p-row block locally, then combine
blocks with the +-1 pattern of the (m/p)-point Hadamard factor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .matrix import _butterfly_axis0, hadamard_sign

__all__ = ["SrhtOperator", "WorkspaceProbe", "new_srht", "apply", "apply_blocked"]


@dataclass(frozen=True, eq=False)
class SrhtOperator:
    """Compression operator fully determined by (m, q, seed).

    ``sample_indices`` holds q distinct row indices in [0, m) and
    ``signs`` the m Rademacher row signs.  Rebuilding from the same
    (m, q, seed) yields bit-identical draws.
    """

    m: int
    q: int
    seed: int
    sample_indices: np.ndarray
    signs: np.ndarray


class WorkspaceProbe:
    """Records the largest number of d-wide rows a transform held live."""

    def __init__(self) -> None:
        self.max_rows = 0

    def observe(self, rows: int) -> None:
        if rows > self.max_rows:
            self.max_rows = rows


def new_srht(m: int, q: int, seed: int) -> SrhtOperator:
    """Draw a fresh operator from a seed.

    Sampling without replacement uses a partial Fisher-Yates pass so the
    draw sequence is pinned down exactly; the sign vector is drawn after
    the indices.
    """
    m = int(m)
    q = int(q)
    if m < 1 or m & (m - 1):
        raise ValueError(f"m must be a power of two, got {m}")
    if not 1 <= q <= m:
        raise ValueError(f"q must lie in [1, {m}], got {q}")
    rng = np.random.default_rng(int(seed))
    idx = np.arange(m)
    for r in range(q):
        s = r + int(rng.integers(m - r))
        idx[r], idx[s] = idx[s], idx[r]
    sample = idx[:q].copy()
    signs = rng.integers(0, 2, size=m).astype(np.float64) * 2.0 - 1.0
    return SrhtOperator(m=m, q=q, seed=int(seed), sample_indices=sample, signs=signs)


def apply(op: SrhtOperator, f) -> np.ndarray:
    """Compress an (m, d) block to (q, d): reference in-core path."""
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 2 or f.shape[0] != op.m:
        raise ValueError(f"expected an ({op.m}, d) block, got shape {f.shape}")
    g = f * op.signs[:, None]
    _butterfly_axis0(g)
    g *= 1.0 / math.sqrt(op.m)
    out = g[op.sample_indices, :] * math.sqrt(op.m / op.q)
    return np.ascontiguousarray(out)


def _largest_pow2_at_most(q: int) -> int:
    return 1 << (q.bit_length() - 1)


def apply_blocked(
    op: SrhtOperator,
    rows: Iterable[np.ndarray] | Iterator[np.ndarray],
    d: int,
    probe: WorkspaceProbe | None = None,
) -> np.ndarray:
    """Compress a stream of m rows to (q, d) holding at most p+q rows.

    ``rows`` must yield exactly m length-d rows.  Workspace is one
    (p, d) block buffer plus the (q, d) output; with p in (q/2, q] the
    peak is below 3q rows regardless of m.  The result matches
    :func:`apply` on the stacked stream to within roundoff.

    Normalization bookkeeping: the block FWHT carries 1/sqrt(p), the
    cross-block Hadamard signs carry 1/sqrt(m/p), and the final sampling
    scale is sqrt(m/q).
    """
    d = int(d)
    if d < 1:
        raise ValueError("d must be positive")
    p = _largest_pow2_at_most(op.q)
    nblocks = op.m // p
    out = np.zeros((op.q, d))
    block = np.empty((p, d))
    if probe is not None:
        probe.observe(p + op.q)

    block_of_sample = op.sample_indices // p
    row_in_block = op.sample_indices % p
    # +-1 pattern of the (m/p)-point Hadamard factor for every sampled
    # row, with its 1/sqrt(m/p) normalization folded in.
    combine = np.empty((op.q, nblocks))
    for r in range(op.q):
        i = int(block_of_sample[r])
        for j in range(nblocks):
            combine[r, j] = hadamard_sign(i, j)
    combine *= 1.0 / math.sqrt(nblocks)

    it = iter(rows)
    for j in range(nblocks):
        for i in range(p):
            try:
                row = next(it)
            except StopIteration:
                raise ValueError(
                    f"row stream ended after {j * p + i} rows, expected {op.m}"
                ) from None
            row = np.asarray(row, dtype=np.float64).reshape(-1)
            if row.shape[0] != d:
                raise ValueError(
                    f"stream row has length {row.shape[0]}, expected {d}"
                )
            block[i] = row
        block *= op.signs[j * p : (j + 1) * p, None]
        _butterfly_axis0(block)
        block *= 1.0 / math.sqrt(p)
        contribution = block[row_in_block, :]
        contribution *= combine[:, j : j + 1]
        out += contribution
    try:
        next(it)
    except StopIteration:
        pass
    else:
        raise ValueError(f"row stream yielded more than {op.m} rows")
    out *= math.sqrt(op.m / op.q)
    return out
