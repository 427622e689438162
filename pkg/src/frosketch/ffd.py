"""Buffered accelerated variant of the frequent-directions sketch.

Instead of shrinking after every ell/2 rows, incoming rows accumulate in
an m-row buffer (m a power of two).  Each time the buffer fills, a fresh
seeded random Hadamard compression squeezes the m rows down to ell/2
rows, which land in the guaranteed-zero back half of the sketch before a
single shrink.  Amortized cost per row drops from O(ell * d) to roughly
O(d log(ell) + ell^2 d / m) while the sketch quality stays within a
constant factor of the exact variant.

Compression trial t draws its operator from a child seed derived from
(seed, t), so results do not depend on how the row stream is split
across insert calls.
"""
from __future__ import annotations

import numpy as np

from .fd import SketchState, fd_insert, new_sketch, shrink
from .matrix import as_matrix
from .rng import derive_seed
from .srht import WorkspaceProbe, apply_blocked, new_srht

__all__ = ["FfdSketcher"]


class FfdSketcher:
    """Streaming sketcher with an m-row buffer and seeded compressions.

    Single-writer, like :class:`~frosketch.fd.SketchState`.  ``probe``
    optionally records the transform workspace footprint of every
    compression.
    """

    def __init__(
        self,
        ell: int,
        m: int,
        d: int,
        seed: int,
        probe: WorkspaceProbe | None = None,
    ) -> None:
        ell = int(ell)
        m = int(m)
        d = int(d)
        if ell < 2 or ell % 2:
            raise ValueError(f"ell must be an even integer >= 2, got {ell}")
        if m < 1 or m & (m - 1):
            raise ValueError(f"m must be a power of two, got {m}")
        if m < ell // 2:
            raise ValueError(f"m must be at least ell/2 = {ell // 2}, got {m}")
        if d < 1:
            raise ValueError(f"d must be positive, got {d}")
        self.ell = ell
        self.m = m
        self.d = d
        self.seed = int(seed)
        self.sketch = new_sketch(ell, d)
        self.trial = 0
        self.probe = probe
        self._buffer = np.zeros((m, d))
        self.buffered = 0

    def insert(self, rows) -> "FfdSketcher":
        """Append rows; every exactly-full buffer is compressed eagerly,
        so fewer than m rows remain buffered on return."""
        rows = as_matrix(rows, name="rows")
        if rows.shape[1] != self.d:
            raise ValueError(
                f"rows have {rows.shape[1]} columns, sketcher expects {self.d}"
            )
        i = 0
        n = rows.shape[0]
        while i < n:
            take = min(self.m - self.buffered, n - i)
            self._buffer[self.buffered : self.buffered + take] = rows[i : i + take]
            self.buffered += take
            i += take
            if self.buffered == self.m:
                self._compress()
        return self

    def _compress(self) -> None:
        q = self.ell // 2
        op = new_srht(self.m, q, derive_seed(self.seed, self.trial))
        compressed = apply_blocked(op, iter(self._buffer), self.d, probe=self.probe)
        state = self.sketch
        # Rows ell/2 .. ell are zero after every shrink, so the
        # compressed block can be written there directly.
        state.b[q : self.ell] = compressed
        state.occupied = self.ell
        shrink(state)
        self.trial += 1
        self.buffered = 0

    def buffer_rows(self) -> np.ndarray:
        """Copy of the rows currently waiting in the buffer."""
        return self._buffer[: self.buffered].copy()

    def snapshot(self) -> np.ndarray:
        """Sketch with any buffered rows folded in, leaving the live
        state untouched."""
        state = self.sketch.copy()
        if self.buffered:
            fd_insert(state, self._buffer[: self.buffered])
        return state.b.copy()

    def finalize(self) -> np.ndarray:
        """Flush buffered rows into the sketch by plain insertion and
        return the final matrix.  Idempotent until new rows arrive."""
        if self.buffered:
            fd_insert(self.sketch, self._buffer[: self.buffered])
            self.buffered = 0
        return self.sketch.b.copy()
