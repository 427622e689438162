"""File formats.

Binary matrices use the FSK1 layout: 4-byte magic ``FSK1``, row count as
little-endian u32, column count as u32, then rows * cols float64 values
little-endian in row-major order.  CSV matrices are headerless comma
files written with 17 significant digits so float64 values round-trip.

Packed code files use magic ``FSKC``, u32 code count, u32 bit width, 4
reserved zero bytes, then one packed little-endian bit row per code.

Sketch checkpoints, hash models, and worker summaries each pair an FSK1
matrix with a JSON sidecar at ``<path>.json`` holding the scalar state
(and, for buffered sketchers, the buffer contents and trial counter).
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .dfrosh import WorkerSummary
from .fd import SketchState, new_sketch
from .ffd import FfdSketcher
from .frosh import BinaryCodes, HashModel
from .matrix import as_matrix

__all__ = [
    "FormatError",
    "save_matrix",
    "load_matrix",
    "save_matrix_fsk1",
    "load_matrix_fsk1",
    "fsk1_shape",
    "iter_matrix_fsk1",
    "save_matrix_csv",
    "load_matrix_csv",
    "save_codes",
    "load_codes",
    "save_sketch",
    "load_sketch",
    "save_model",
    "load_model",
    "save_summary",
    "load_summary",
]

MAGIC_MATRIX = b"FSK1"
MAGIC_CODES = b"FSKC"
_MATRIX_HEADER = struct.Struct("<4sII")
_CODES_HEADER = struct.Struct("<4sII4s")


class FormatError(ValueError):
    """Malformed file content; names the byte offset of the problem."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset


def save_matrix_fsk1(m, path) -> None:
    a = as_matrix(m)
    with open(path, "wb") as fh:
        fh.write(_MATRIX_HEADER.pack(MAGIC_MATRIX, a.shape[0], a.shape[1]))
        fh.write(a.astype("<f8", copy=False).tobytes())


def _parse_matrix_header(data: bytes, path) -> tuple[int, int]:
    if len(data) < _MATRIX_HEADER.size:
        raise FormatError(f"{path}: truncated header", offset=len(data))
    magic, rows, cols = _MATRIX_HEADER.unpack_from(data, 0)
    if magic != MAGIC_MATRIX:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC_MATRIX!r}", offset=0)
    if rows == 0 or cols == 0:
        raise FormatError(f"{path}: empty matrix ({rows}x{cols})", offset=4)
    return rows, cols


def load_matrix_fsk1(path) -> np.ndarray:
    data = Path(path).read_bytes()
    rows, cols = _parse_matrix_header(data, path)
    expected = _MATRIX_HEADER.size + rows * cols * 8
    if len(data) != expected:
        raise FormatError(
            f"{path}: payload holds {len(data) - _MATRIX_HEADER.size} bytes, "
            f"expected {rows * cols * 8} for {rows}x{cols} float64",
            offset=_MATRIX_HEADER.size,
        )
    values = np.frombuffer(data, dtype="<f8", offset=_MATRIX_HEADER.size)
    try:
        return as_matrix(values.reshape(rows, cols).copy())
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}", offset=_MATRIX_HEADER.size) from exc


def fsk1_shape(path) -> tuple[int, int]:
    """Read just the header of an FSK1 file."""
    with open(path, "rb") as fh:
        return _parse_matrix_header(fh.read(_MATRIX_HEADER.size), path)


def iter_matrix_fsk1(path, chunk_rows: int):
    """Yield row blocks of at most ``chunk_rows`` from an FSK1 file,
    keeping only one block in memory at a time."""
    chunk_rows = int(chunk_rows)
    if chunk_rows < 1:
        raise ValueError("chunk_rows must be positive")
    size = Path(path).stat().st_size
    with open(path, "rb") as fh:
        rows, cols = _parse_matrix_header(fh.read(_MATRIX_HEADER.size), path)
        expected = _MATRIX_HEADER.size + rows * cols * 8
        if size != expected:
            raise FormatError(
                f"{path}: file holds {size - _MATRIX_HEADER.size} payload bytes, "
                f"expected {rows * cols * 8} for {rows}x{cols} float64",
                offset=_MATRIX_HEADER.size,
            )
        remaining = rows
        while remaining:
            take = min(chunk_rows, remaining)
            data = fh.read(take * cols * 8)
            block = np.frombuffer(data, dtype="<f8").reshape(take, cols)
            try:
                yield as_matrix(block.copy())
            except ValueError as exc:
                raise FormatError(f"{path}: {exc}") from exc
            remaining -= take


def save_matrix_csv(m, path) -> None:
    np.savetxt(path, as_matrix(m), fmt="%.17g", delimiter=",")


def load_matrix_csv(path) -> np.ndarray:
    try:
        values = np.loadtxt(path, delimiter=",", ndmin=2)
    except (ValueError, OSError) as exc:
        if isinstance(exc, OSError) and not Path(path).exists():
            raise
        raise FormatError(f"{path}: CSV parse failure: {exc}") from exc
    try:
        return as_matrix(values)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def _format_of(path, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in ("fsk1", "csv"):
            raise ValueError(f"unknown matrix format {fmt!r}")
        return fmt
    return "csv" if str(path).endswith(".csv") else "fsk1"


def save_matrix(m, path, fmt: str | None = None) -> None:
    """Write a matrix; the format comes from ``fmt`` or the extension."""
    if _format_of(path, fmt) == "csv":
        save_matrix_csv(m, path)
    else:
        save_matrix_fsk1(m, path)


def load_matrix(path, fmt: str | None = None) -> np.ndarray:
    """Read a matrix; the format comes from ``fmt`` or the extension."""
    if _format_of(path, fmt) == "csv":
        return load_matrix_csv(path)
    return load_matrix_fsk1(path)


def save_codes(codes: BinaryCodes, path) -> None:
    bits = np.ascontiguousarray(codes.bits, dtype=np.uint8)
    if bits.shape != (codes.n, (codes.r + 7) // 8):
        raise ValueError(f"packed bits have shape {bits.shape}, inconsistent header")
    with open(path, "wb") as fh:
        fh.write(_CODES_HEADER.pack(MAGIC_CODES, codes.n, codes.r, b"\x00" * 4))
        fh.write(bits.tobytes())


def load_codes(path) -> BinaryCodes:
    data = Path(path).read_bytes()
    if len(data) < _CODES_HEADER.size:
        raise FormatError(f"{path}: truncated header", offset=len(data))
    magic, n, r, _reserved = _CODES_HEADER.unpack_from(data, 0)
    if magic != MAGIC_CODES:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC_CODES!r}", offset=0)
    if n == 0 or r == 0:
        raise FormatError(f"{path}: empty code table", offset=4)
    nbytes = (r + 7) // 8
    expected = _CODES_HEADER.size + n * nbytes
    if len(data) != expected:
        raise FormatError(
            f"{path}: payload holds {len(data) - _CODES_HEADER.size} bytes, "
            f"expected {n * nbytes}",
            offset=_CODES_HEADER.size,
        )
    bits = np.frombuffer(data, dtype=np.uint8, offset=_CODES_HEADER.size)
    return BinaryCodes(n=n, r=r, bits=bits.reshape(n, nbytes).copy())


def _sidecar(path) -> str:
    return str(path) + ".json"


def save_sketch(sk, path) -> None:
    """Checkpoint a sketch: FSK1 matrix plus a JSON sidecar.

    Accepts either an exact :class:`SketchState` or a buffered
    :class:`FfdSketcher`; the buffered form also records the pending
    buffer and trial counter so a resumed run continues bit-identically.
    """
    if isinstance(sk, SketchState):
        save_matrix_fsk1(sk.b, path)
        meta = {"kind": "fd", "ell": sk.ell, "d": sk.d, "occupied": sk.occupied}
    elif isinstance(sk, FfdSketcher):
        save_matrix_fsk1(sk.sketch.b, path)
        meta = {
            "kind": "ffd",
            "ell": sk.ell,
            "d": sk.d,
            "occupied": sk.sketch.occupied,
            "m": sk.m,
            "seed": sk.seed,
            "trial": sk.trial,
            "buffer": sk.buffer_rows().tolist(),
        }
    else:
        raise TypeError(f"cannot checkpoint {type(sk).__name__}")
    with open(_sidecar(path), "w") as fh:
        json.dump(meta, fh)


def load_sketch(path):
    """Restore a checkpoint written by :func:`save_sketch`."""
    b = load_matrix_fsk1(path)
    try:
        with open(_sidecar(path)) as fh:
            meta = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{_sidecar(path)}: invalid JSON: {exc}") from exc
    try:
        kind = meta["kind"]
        ell = int(meta["ell"])
        d = int(meta["d"])
        occupied = int(meta["occupied"])
    except KeyError as exc:
        raise FormatError(f"{_sidecar(path)}: missing field {exc}") from exc
    if b.shape != (ell, d):
        raise FormatError(
            f"{path}: matrix shape {b.shape} disagrees with sidecar ({ell}, {d})"
        )
    if kind == "fd":
        return SketchState(ell=ell, d=d, b=b, occupied=occupied)
    if kind == "ffd":
        sk = FfdSketcher(ell, int(meta["m"]), d, int(meta["seed"]))
        sk.sketch = SketchState(ell=ell, d=d, b=b, occupied=occupied)
        sk.trial = int(meta["trial"])
        buffered = np.asarray(meta["buffer"], dtype=np.float64)
        if buffered.size:
            sk._buffer[: buffered.shape[0]] = buffered
            sk.buffered = buffered.shape[0]
        return sk
    raise FormatError(f"{_sidecar(path)}: unknown sketch kind {kind!r}")


def save_model(model: HashModel, path) -> None:
    save_matrix_fsk1(model.w, path)
    with open(_sidecar(path), "w") as fh:
        json.dump({"mu": model.mu.tolist(), "r": model.r}, fh)


def load_model(path) -> HashModel:
    w = load_matrix_fsk1(path)
    try:
        with open(_sidecar(path)) as fh:
            meta = json.load(fh)
        mu = np.asarray(meta["mu"], dtype=np.float64)
        r = int(meta["r"])
    except (json.JSONDecodeError, KeyError) as exc:
        raise FormatError(f"{_sidecar(path)}: bad model sidecar: {exc}") from exc
    if w.shape[1] != r or mu.shape != (w.shape[0],):
        raise FormatError(f"{path}: model pieces disagree (w {w.shape}, r {r})")
    return HashModel(w=w, mu=mu, r=r)


def save_summary(summary: WorkerSummary, path) -> None:
    save_matrix_fsk1(summary.b, path)
    with open(_sidecar(path), "w") as fh:
        json.dump(
            {
                "mu": summary.mu.tolist(),
                "n": summary.n,
                "worker_id": summary.worker_id,
            },
            fh,
        )


def load_summary(path) -> WorkerSummary:
    b = load_matrix_fsk1(path)
    try:
        with open(_sidecar(path)) as fh:
            meta = json.load(fh)
        mu = np.asarray(meta["mu"], dtype=np.float64)
        n = int(meta["n"])
        worker_id = int(meta["worker_id"])
    except (json.JSONDecodeError, KeyError) as exc:
        raise FormatError(f"{_sidecar(path)}: bad summary sidecar: {exc}") from exc
    if mu.shape != (b.shape[1],):
        raise FormatError(f"{path}: mean length {mu.shape} disagrees with sketch")
    return WorkerSummary(b=b, mu=mu, n=n, worker_id=worker_id)
