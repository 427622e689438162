"""Online mean removal for chunked row streams.

Each chunk is centered around its own mean; from the second chunk on, a
single correction row sqrt(tau*h/(tau+h)) * (chunk_mean - running_mean)
is appended so that the stacked outputs satisfy G'G = (A - mean(A))'
(A - mean(A)) exactly, where A is everything seen so far.  The running
mean and count are then folded forward.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .matrix import as_matrix

__all__ = ["CenteringState", "center_chunk"]


@dataclass(eq=False)
class CenteringState:
    """Running mean ``phi`` over ``tau`` rows seen so far."""

    phi: np.ndarray | None = field(default=None)
    tau: int = 0


def center_chunk(state: CenteringState, chunk) -> tuple[CenteringState, np.ndarray]:
    """Center one chunk against the running mean, updating the state.

    Returns the mutated state together with the centered output G: the
    chunk minus its own mean, plus the correction row once any earlier
    rows exist.
    """
    a = as_matrix(chunk, name="chunk")
    h = a.shape[0]
    mu = a.mean(axis=0)
    if state.tau == 0:
        g = a - mu
        state.phi = mu
        state.tau = h
        return state, g
    if state.phi.shape[0] != a.shape[1]:
        raise ValueError(
            f"chunk has {a.shape[1]} columns, stream established {state.phi.shape[0]}"
        )
    tau = state.tau
    correction = math.sqrt(tau * h / (tau + h)) * (mu - state.phi)
    g = np.vstack([a - mu, correction[None, :]])
    state.phi = (tau * state.phi + h * mu) / (tau + h)
    state.tau = tau + h
    return state, g
