"""Online sketching hash trainer and binary-code utilities.

A hash model is a centered linear projection followed by sign
thresholding: bit k of row a is 1 when (a - mu) . w[:, k] >= 0 (the sign
of exact zero counts as positive).  Models are trained from a chunked
row stream by centering the chunks online, feeding the centered output
to a sketch, and periodically taking the top right singular vectors of
the sketch as the projection.

Two sketchers are available: the exact frequent-directions sketch and
the buffered accelerated variant, selected by ``TrainConfig.sketcher``.
The buffered variant is the fast trainer; the exact one is the
conventional online-sketching baseline.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from .centering import CenteringState, center_chunk
from .fd import fd_insert, new_sketch
from .ffd import FfdSketcher
from .matrix import as_matrix, svd

__all__ = [
    "HashModel",
    "BinaryCodes",
    "TrainConfig",
    "StreamTrainer",
    "train_stream",
    "extract_model",
    "hash_codes",
    "lsh_model",
    "hamming_rank",
    "hamming_distances",
]

_POPCOUNT = np.array([bin(x).count("1") for x in range(256)], dtype=np.uint8)


@dataclass(frozen=True, eq=False)
class HashModel:
    """Projection ``w`` (d, r) with orthonormal columns and center ``mu`` (d,)."""

    w: np.ndarray
    mu: np.ndarray
    r: int


@dataclass(frozen=True, eq=False)
class BinaryCodes:
    """n packed r-bit codes; ``bits`` is (n, ceil(r/8)) uint8 with
    little-endian bit order inside each byte and zero padding bits."""

    n: int
    r: int
    bits: np.ndarray


def _next_pow2(x: int) -> int:
    return 1 << max(0, (int(x) - 1)).bit_length()


@dataclass(frozen=True)
class TrainConfig:
    """Training parameters.

    ``ell`` defaults to 2*r and ``m`` to the next power of two >= 4*d;
    both are resolved once the stream dimension is known.  ``eta`` is
    the emission period in chunks and ``sketcher`` picks "ffd" (buffered
    fast sketch) or "fd" (exact sketch).
    """

    r: int
    ell: int | None = None
    m: int | None = None
    eta: int = 1
    seed: int = 0
    sketcher: str = "ffd"

    def resolved(self, d: int) -> "TrainConfig":
        d = int(d)
        if d < 1:
            raise ValueError("d must be positive")
        ell = 2 * self.r if self.ell is None else int(self.ell)
        m = _next_pow2(4 * d) if self.m is None else int(self.m)
        cfg = replace(self, ell=ell, m=m)
        if cfg.r < 1:
            raise ValueError(f"r must be positive, got {cfg.r}")
        if ell < 2 or ell % 2:
            raise ValueError(f"ell must be an even integer >= 2, got {ell}")
        if cfg.r > ell:
            raise ValueError(f"r={cfg.r} exceeds ell={ell}")
        if cfg.r > d:
            raise ValueError(f"r={cfg.r} exceeds the data dimension {d}")
        if cfg.eta < 1:
            raise ValueError(f"eta must be >= 1, got {cfg.eta}")
        if cfg.sketcher not in ("fd", "ffd"):
            raise ValueError(f"unknown sketcher {cfg.sketcher!r}")
        if cfg.seed < 0:
            raise ValueError("seed must be non-negative")
        return cfg


def _sign_normalize_columns(w: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry of each is positive."""
    for k in range(w.shape[1]):
        col = w[:, k]
        idx = int(np.argmax(np.abs(col)))
        if col[idx] < 0:
            col *= -1.0
    return w


def extract_model(b, r: int, mu) -> HashModel:
    """Top-r right singular vectors of a sketch as a hash model.

    Columns are sign-normalized (largest-magnitude entry positive) so
    the model is a deterministic function of the sketch.
    """
    res = svd(b)
    r = int(r)
    if not 1 <= r <= res.vt.shape[0]:
        raise ValueError(
            f"r must lie in [1, {res.vt.shape[0]}] for this sketch, got {r}"
        )
    w = np.ascontiguousarray(res.vt[:r].T)
    _sign_normalize_columns(w)
    mu = np.asarray(mu, dtype=np.float64).reshape(-1).copy()
    if mu.shape[0] != w.shape[0]:
        raise ValueError(f"mu has length {mu.shape[0]}, expected {w.shape[0]}")
    return HashModel(w=w, mu=mu, r=r)


class StreamTrainer:
    """Incremental trainer: absorb chunks, snapshot models on demand."""

    def __init__(self, cfg: TrainConfig, d: int) -> None:
        self.cfg = cfg.resolved(d)
        self.d = int(d)
        self.centering = CenteringState()
        if self.cfg.sketcher == "fd":
            self._fd = new_sketch(self.cfg.ell, self.d)
            self._ffd = None
        else:
            self._fd = None
            self._ffd = FfdSketcher(self.cfg.ell, self.cfg.m, self.d, self.cfg.seed)
        self.chunks_seen = 0

    @property
    def phi(self) -> np.ndarray:
        if self.centering.phi is None:
            raise ValueError("no chunks absorbed yet")
        return self.centering.phi.copy()

    @property
    def tau(self) -> int:
        return self.centering.tau

    def absorb(self, chunk) -> None:
        _, g = center_chunk(self.centering, chunk)
        if self._ffd is not None:
            self._ffd.insert(g)
        else:
            fd_insert(self._fd, g)
        self.chunks_seen += 1

    def sketch_snapshot(self) -> np.ndarray:
        """Current sketch with buffered rows folded in, live state untouched."""
        if self._ffd is not None:
            return self._ffd.snapshot()
        return self._fd.b.copy()

    def finalize_sketch(self) -> np.ndarray:
        """Flush any buffer into the live sketch and return it."""
        if self._ffd is not None:
            return self._ffd.finalize()
        return self._fd.b.copy()

    def current_model(self) -> HashModel:
        return extract_model(self.sketch_snapshot(), self.cfg.r, self.phi)


def train_stream(chunks: Iterable, cfg: TrainConfig) -> list[HashModel]:
    """Consume a chunk stream, emitting a model every ``cfg.eta`` chunks.

    Emission counts every chunk, so eta=1 yields one model per chunk and
    a 10-chunk stream with eta=10 yields exactly one model at the end.
    Training continues across emissions; each emitted model snapshots
    the sketch without disturbing the live buffer.
    """
    it = iter(chunks)
    trainer = None
    models: list[HashModel] = []
    for j, chunk in enumerate(it, start=1):
        chunk = as_matrix(chunk, name="chunk")
        if trainer is None:
            trainer = StreamTrainer(cfg, chunk.shape[1])
        trainer.absorb(chunk)
        if j % trainer.cfg.eta == 0:
            models.append(trainer.current_model())
    if trainer is None:
        raise ValueError("train_stream needs at least one chunk")
    return models


def hash_codes(model: HashModel, rows) -> BinaryCodes:
    """Binary codes for a row block: bit k of row a is 1 exactly when
    (a - mu) . w[:, k] >= 0."""
    a = as_matrix(rows, name="rows")
    if a.shape[1] != model.w.shape[0]:
        raise ValueError(
            f"rows have {a.shape[1]} columns, model expects {model.w.shape[0]}"
        )
    projection = (a - model.mu) @ model.w
    bits = projection >= 0.0
    packed = np.packbits(bits, axis=1, bitorder="little")
    return BinaryCodes(n=a.shape[0], r=model.r, bits=packed)


def lsh_model(d: int, r: int, seed: int) -> HashModel:
    """Data-independent baseline: orthonormalized Gaussian projection,
    zero center."""
    d = int(d)
    r = int(r)
    if not 1 <= r <= d:
        raise ValueError(f"r must lie in [1, {d}], got {r}")
    g = np.random.default_rng(int(seed)).standard_normal((d, r))
    q, _ = np.linalg.qr(g)
    w = np.ascontiguousarray(q)
    _sign_normalize_columns(w)
    return HashModel(w=w, mu=np.zeros(d), r=r)


def hamming_distances(query_bits, db: BinaryCodes) -> np.ndarray:
    """Hamming distance from one packed code to every database code."""
    q = np.asarray(query_bits, dtype=np.uint8).reshape(-1)
    if q.shape[0] != db.bits.shape[1]:
        raise ValueError(
            f"query code has {q.shape[0]} bytes, database codes have {db.bits.shape[1]}"
        )
    return _POPCOUNT[np.bitwise_xor(db.bits, q)].sum(axis=1, dtype=np.int64)


def hamming_rank(query_bits, db: BinaryCodes) -> np.ndarray:
    """Database indices sorted by ascending Hamming distance to the
    query code, ties broken by the original index."""
    return np.argsort(hamming_distances(query_bits, db), kind="stable")
