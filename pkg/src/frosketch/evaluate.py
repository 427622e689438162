"""Retrieval ground truth, ranking metrics, and sketch-error measures."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .frosh import BinaryCodes, HashModel, hamming_rank, hash_codes
from .matrix import as_matrix, spectral_norm

__all__ = [
    "RetrievalTask",
    "make_task",
    "average_precision",
    "map_score",
    "pr_curve",
    "task_rankings",
    "evaluate_map",
    "relative_error",
    "centered_relative_error",
]


@dataclass(frozen=True, eq=False)
class RetrievalTask:
    """Database, queries, and per-query true-neighbor index sets.

    ``truth`` is (n_queries, t) with each row sorted ascending; t is the
    ceiling of fraction * n_database.
    """

    database: np.ndarray
    queries: np.ndarray
    truth: np.ndarray


def make_task(database, queries, fraction: float = 0.02) -> RetrievalTask:
    """Exact Euclidean top-ceil(fraction*n) neighbors per query.

    Ties at the cutoff go to the lower database index.
    """
    db = as_matrix(database, name="database")
    qs = as_matrix(queries, name="queries")
    if db.shape[1] != qs.shape[1]:
        raise ValueError(
            f"database has {db.shape[1]} columns, queries have {qs.shape[1]}"
        )
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    n = db.shape[0]
    t = math.ceil(fraction * n)
    db_sq = (db * db).sum(axis=1)
    truth = np.empty((qs.shape[0], t), dtype=np.int64)
    for i in range(qs.shape[0]):
        d2 = db_sq - 2.0 * (db @ qs[i])
        order = np.argsort(d2, kind="stable")
        truth[i] = np.sort(order[:t])
    return RetrievalTask(database=db, queries=qs, truth=truth)


def average_precision(ranking, truth) -> float:
    """Mean of the precisions at each true neighbor's rank position.

    The mean is taken over |truth| recall steps; an empty truth set
    scores 0.0, as does a ranking that finds nothing.
    """
    truth = np.asarray(truth, dtype=np.int64).reshape(-1)
    if truth.size == 0:
        return 0.0
    ranking = np.asarray(ranking, dtype=np.int64).reshape(-1)
    relevant = np.isin(ranking, truth)
    hits = np.flatnonzero(relevant)
    if hits.size == 0:
        return 0.0
    precisions = np.arange(1, hits.size + 1, dtype=np.float64) / (hits + 1.0)
    return float(precisions.sum() / truth.size)


def map_score(rankings: Sequence, truths: Sequence) -> float:
    """Mean average precision over queries."""
    if len(rankings) != len(truths):
        raise ValueError("rankings and truths must pair up")
    if not len(rankings):
        raise ValueError("map_score needs at least one query")
    return float(
        np.mean([average_precision(r, t) for r, t in zip(rankings, truths)])
    )


def pr_curve(
    rankings: Sequence, truths: Sequence, cuts: Sequence[int]
) -> list[tuple[float, float]]:
    """(recall, precision) averaged over queries at each returned-point
    count in ``cuts``."""
    if len(rankings) != len(truths):
        raise ValueError("rankings and truths must pair up")
    cuts = [int(c) for c in cuts]
    if any(c < 1 for c in cuts):
        raise ValueError("cuts must be positive")
    points = []
    cumulative = []
    for ranking, truth in zip(rankings, truths):
        relevant = np.isin(np.asarray(ranking), np.asarray(truth))
        cumulative.append((np.cumsum(relevant), len(truth)))
    for c in cuts:
        precisions = []
        recalls = []
        for cum, t in cumulative:
            hits = float(cum[min(c, cum.size) - 1])
            precisions.append(hits / c)
            recalls.append(hits / t if t else 0.0)
        points.append((float(np.mean(recalls)), float(np.mean(precisions))))
    return points


def task_rankings(model: HashModel, task: RetrievalTask) -> list[np.ndarray]:
    """Hamming rankings of the database for every query under a model."""
    db_codes = hash_codes(model, task.database)
    query_codes = hash_codes(model, task.queries)
    return [hamming_rank(query_codes.bits[i], db_codes) for i in range(query_codes.n)]


def evaluate_map(model: HashModel, task: RetrievalTask) -> float:
    """Mean average precision of a model on a retrieval task."""
    rankings = task_rankings(model, task)
    return map_score(rankings, list(task.truth))


def relative_error(a, b) -> float:
    """Spectral norm of A'A - B'B over the squared Frobenius norm of A."""
    a = as_matrix(a, name="a")
    b = as_matrix(b, name="b")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"column mismatch: {a.shape[1]} vs {b.shape[1]}")
    gap = a.T @ a - b.T @ b
    fro2 = float((a * a).sum())
    if fro2 == 0.0:
        return 0.0
    return spectral_norm(gap, tol=1e-9) / fro2


def centered_relative_error(a, b) -> float:
    """Same measure with A replaced by its column-mean-centered version."""
    a = as_matrix(a, name="a")
    return relative_error(a - a.mean(axis=0), b)
