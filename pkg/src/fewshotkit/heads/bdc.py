"""Classification on double-centered channel-distance matrices.

An image's grid is summarized by a C x C matrix: pairwise Euclidean
distances between channel columns (each column is one channel's values
across the H*W positions), double-centered so that every row and column
sums to zero.  Class prototypes are means of these matrices over the
support set, and queries are scored by the Frobenius inner product
tr(A_query^T P_k), softmaxed with a temperature.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .emd import FeatureGrid
from .metric import Posterior, nll_loss, softmax

_CENTER_TOL = 1e-6
_SYM_TOL = 1e-9


@dataclass(frozen=True)
class BdcMatrix:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        _check_centered(self.values)


@dataclass(frozen=True)
class BdcPrototype:
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=np.float64))
        _check_centered(self.matrix)


def _check_centered(a: np.ndarray):
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if np.abs(a - a.T).max(initial=0.0) > _SYM_TOL:
        raise ValueError("matrix must be symmetric")
    if a.size:
        if np.abs(a.sum(axis=0)).max() > _CENTER_TOL or np.abs(a.sum(axis=1)).max() > _CENTER_TOL:
            raise ValueError("row/column sums must vanish (double-centering)")


def channel_distance_matrix(grid: FeatureGrid) -> np.ndarray:
    """Euclidean distances between channel columns, (C, C)."""
    cols = grid.vectors.T  # (C, positions)
    sq = (cols * cols).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (cols @ cols.T)
    np.maximum(d2, 0.0, out=d2)
    d = np.sqrt(d2)
    np.fill_diagonal(d, 0.0)
    return 0.5 * (d + d.T)


def double_center(d: np.ndarray) -> np.ndarray:
    """A = D - rowmean - colmean + grandmean, then exact symmetrization."""
    row = d.mean(axis=1, keepdims=True)
    col = d.mean(axis=0, keepdims=True)
    a = d - row - col + d.mean()
    return 0.5 * (a + a.T)


def bdc_matrix(grid: FeatureGrid) -> BdcMatrix:
    if grid.channels < 2:
        raise ValueError("need at least 2 channels")
    return BdcMatrix(double_center(channel_distance_matrix(grid)))


def bdc_prototypes(episode_support_grids: Sequence[Sequence[FeatureGrid]]) -> list:
    """Per-slot arithmetic means of the support images' centered matrices."""
    protos = []
    for slot_grids in episode_support_grids:
        if not slot_grids:
            raise ValueError("empty support slot")
        mats = [bdc_matrix(g).values for g in slot_grids]
        if len({m.shape for m in mats}) != 1:
            raise ValueError("mixed shapes within a slot")
        protos.append(BdcPrototype(np.mean(mats, axis=0)))
    return protos


def bdc_scores(prototypes: Sequence[BdcPrototype], query_matrix: BdcMatrix) -> np.ndarray:
    """Frobenius inner products tr(A_query^T P_k), one per slot."""
    a = query_matrix.values
    return np.array([float((a * p.matrix).sum()) for p in prototypes])


def classify_bdc(prototypes: Sequence[BdcPrototype], query_matrix: BdcMatrix,
                 tau: float = 1.0) -> Posterior:
    """softmax over slots of tau * <A_query, P_k>; argmax is tau-invariant."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    for p in prototypes:
        if p.matrix.shape != query_matrix.values.shape:
            raise ValueError("channel count mismatch")
    return Posterior(softmax(tau * bdc_scores(prototypes, query_matrix)))


def bdc_loss(posterior: Posterior, true_slot: int) -> float:
    return nll_loss(posterior, true_slot)
