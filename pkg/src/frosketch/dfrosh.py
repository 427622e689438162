"""Distributed training: independent worker sketches plus a cheap merge.

Each worker runs the centering + sketch pipeline over its own slice of
the data and ships back only its final sketch, local mean, and row
count.  Merging folds the summaries together in ascending worker order:
the stacked sketch rows plus one mean-correction row per summary enter
an exact frequent-directions sketch, while the mean and count follow the
same running recurrence the centering stage uses.  The merged output
therefore summarizes the globally centered data without any second pass.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fd import SketchState, fd_insert
from .frosh import HashModel, StreamTrainer, TrainConfig, extract_model
from .matrix import as_matrix
from .rng import derive_seed

__all__ = ["WorkerSummary", "worker_sketch", "merge", "train_distributed"]


@dataclass(frozen=True, eq=False)
class WorkerSummary:
    """What a worker ships home: sketch ``b`` (ell, d), local mean ``mu``
    (d,), row count ``n``, and its id."""

    b: np.ndarray
    mu: np.ndarray
    n: int
    worker_id: int


def _worker_seed(seed: int, worker_id: int) -> int:
    # Worker 0 keeps the master seed unchanged so a single-worker run is
    # bit-identical to the single-machine trainer.
    return int(seed) if worker_id == 0 else derive_seed(seed, worker_id)


def worker_sketch(part, cfg: TrainConfig, worker_id: int = 0) -> WorkerSummary:
    """Run the local pipeline over one worker's rows.

    The part is streamed in m-row chunks, exactly like the single
    machine trainer, with the worker's child seed substituted in.
    """
    part = as_matrix(part, name="part")
    if worker_id < 0:
        raise ValueError("worker_id must be non-negative")
    cfg = cfg.resolved(part.shape[1])
    local = TrainConfig(
        r=cfg.r,
        ell=cfg.ell,
        m=cfg.m,
        eta=cfg.eta,
        seed=_worker_seed(cfg.seed, worker_id),
        sketcher=cfg.sketcher,
    )
    trainer = StreamTrainer(local, part.shape[1])
    for start in range(0, part.shape[0], cfg.m):
        trainer.absorb(part[start : start + cfg.m])
    b = trainer.finalize_sketch()
    return WorkerSummary(b=b, mu=trainer.phi, n=trainer.tau, worker_id=int(worker_id))


def _infer_occupied(b: np.ndarray) -> int:
    nonzero = np.flatnonzero(np.any(b != 0.0, axis=1))
    return int(nonzero[-1]) + 1 if nonzero.size else 0


def merge(
    summaries: Sequence[WorkerSummary], ell: int | None = None
) -> tuple[np.ndarray, np.ndarray, int]:
    """Fold worker summaries into one (sketch, mean, count) triple.

    Summaries are processed in ascending worker_id, so the result
    depends only on the set of summaries, not their arrival order.
    """
    if not summaries:
        raise ValueError("merge needs at least one summary")
    ordered = sorted(summaries, key=lambda s: s.worker_id)
    first = ordered[0]
    if ell is None:
        ell = first.b.shape[0]
    ell = int(ell)
    d = first.b.shape[1]
    for s in ordered:
        if s.b.shape != (ell, d):
            raise ValueError(
                f"worker {s.worker_id} sketch has shape {s.b.shape}, expected {(ell, d)}"
            )
        if s.mu.shape != (d,):
            raise ValueError(f"worker {s.worker_id} mean has shape {s.mu.shape}")
        if s.n < 1:
            raise ValueError(f"worker {s.worker_id} has row count {s.n}")
    state = SketchState(ell=ell, d=d, b=first.b.copy(), occupied=_infer_occupied(first.b))
    phi = first.mu.astype(np.float64).copy()
    tau = int(first.n)
    for s in ordered[1:]:
        correction = math.sqrt(tau * s.n / (tau + s.n)) * (s.mu - phi)
        fd_insert(state, np.vstack([s.b, correction[None, :]]))
        phi = (tau * phi + s.n * s.mu) / (tau + s.n)
        tau += int(s.n)
    return state.b.copy(), phi, tau


def train_distributed(
    parts: Sequence, cfg: TrainConfig, max_workers: int = 1
) -> HashModel:
    """Sketch each part under its worker's child seed, merge, and take
    the top-r right singular vectors of the merged sketch.

    Worker results do not interact until the merge, so running them
    concurrently (max_workers > 1) cannot change the output.
    """
    parts = [as_matrix(p, name=f"part {i}") for i, p in enumerate(parts)]
    if not parts:
        raise ValueError("train_distributed needs at least one part")
    cfg = cfg.resolved(parts[0].shape[1])
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            summaries = list(
                pool.map(lambda iw: worker_sketch(iw[1], cfg, iw[0]), enumerate(parts))
            )
    else:
        summaries = [worker_sketch(p, cfg, i) for i, p in enumerate(parts)]
    b, phi, _ = merge(summaries, cfg.ell)
    return extract_model(b, cfg.r, phi)
