"""Structural similarity between spatial feature grids via optimal transport.

Each image is a grid of H*W node embeddings.  Node mass is set by a
cross-reference rule (clamped dot product with the other image's mean
node, normalized), ground costs are cosine distances between nodes, and
the similarity is the flow-weighted cosine sum of (1 - c_ij) x_ij under
the optimal transportation plan.  Because the marginals are normalized
to total mass 1, the similarity equals 1 - optimal_cost and lives in
[-1, 1].  A pooled embedding is the 1x1 special case, where the head
reduces to plain cosine similarity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..transport import TransportInstance, normalize_weights, solve_transport


@dataclass(frozen=True)
class FeatureGrid:
    """H*W node vectors in channel-major order, shape (positions, channels)."""

    vectors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vectors", np.asarray(self.vectors, dtype=np.float64))
        v = self.vectors
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError("grid must be a (positions >= 1, channels >= 1) matrix")

    @property
    def positions(self) -> int:
        return self.vectors.shape[0]

    @property
    def channels(self) -> int:
        return self.vectors.shape[1]


def cosine_cost_matrix(support_grid: FeatureGrid, query_grid: FeatureGrid) -> np.ndarray:
    """c_ij = 1 - cos(s_i, q_j), in [0, 2]; zero-norm nodes cost 1 everywhere."""
    s, q = support_grid.vectors, query_grid.vectors
    if s.shape[1] != q.shape[1]:
        raise ValueError(f"channel mismatch: {s.shape[1]} vs {q.shape[1]}")
    ns = np.linalg.norm(s, axis=1)
    nq = np.linalg.norm(q, axis=1)
    denom = np.outer(ns, nq)
    cos = np.zeros((s.shape[0], q.shape[0]))
    ok = denom > 0
    np.divide(s @ q.T, denom, out=cos, where=ok)
    return np.clip(1.0 - cos, 0.0, 2.0)


def cross_reference_weights(own_grid: FeatureGrid, other_grid: FeatureGrid) -> np.ndarray:
    """Node masses of own_grid: clamped dot with the other grid's mean node.

    All-clamped (or all-zero) weights fall back to uniform mass via
    normalize_weights, so every grid always carries total mass 1.
    """
    if own_grid.channels != other_grid.channels:
        raise ValueError("channel mismatch")
    reference = other_grid.vectors.mean(axis=0)
    raw = np.maximum(own_grid.vectors @ reference, 0.0)
    return normalize_weights(raw)


def emd_similarity(support_grid: FeatureGrid, query_grid: FeatureGrid) -> float:
    """Flow-weighted cosine similarity under the optimal transport plan."""
    supplies = cross_reference_weights(support_grid, query_grid)
    demands = cross_reference_weights(query_grid, support_grid)
    costs = cosine_cost_matrix(support_grid, query_grid)
    plan = solve_transport(TransportInstance(supplies, demands, costs))
    return float(((1.0 - costs) * plan.flows).sum())


def mean_grid(grids: Sequence[FeatureGrid]) -> FeatureGrid:
    """Element-wise mean grid; the K-shot class representative."""
    if not grids:
        raise ValueError("need at least one grid")
    shape = grids[0].vectors.shape
    for g in grids:
        if g.vectors.shape != shape:
            raise ValueError("mixed grid shapes within an episode")
    return FeatureGrid(np.mean([g.vectors for g in grids], axis=0))


def classify_emd(episode_support_grids: Sequence[Sequence[FeatureGrid]],
                 query_grid: FeatureGrid) -> int:
    """Argmax similarity against per-slot mean grids; ties to the lowest slot."""
    sims = [emd_similarity(mean_grid(slot_grids), query_grid)
            for slot_grids in episode_support_grids]
    return int(np.argmax(sims))
