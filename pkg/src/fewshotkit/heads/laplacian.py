"""Transductive inference with a Laplacian smoothness penalty.

All queries of an episode are labeled jointly by minimizing

    E(Y) = sum_q sum_c y_qc * d(z_q, m_c)
         + lambda * (1/2) * (1/2) * sum_{q,p} w_qp * ||y_q - y_p||^2

over soft assignments Y, where d is squared Euclidean distance to the
slot prototypes m_c and w is a knn-sparsified RBF affinity among the
query embeddings.

The optimizer is bound minimization on the entropy-relaxed objective

    G(Y) = sum_q y_q . d_q  +  sum_q y_q . ln y_q
         - (lambda/2) * sum_{q,p} w_qp * y_q . y_p

whose single-row minimizer is the closed form
``y_q = softmax(-d_q + lambda * (W Y)_q)``.  Rows are updated in
graph-colored blocks: rows sharing a color have no affinity edge between
them, so a simultaneous block update equals exact coordinate minimization
and G can never increase.  On hard assignments G and E differ by a
constant, so descending G targets the same discrete optimum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .metric import PrototypeSet, pairwise_sqdist, softmax


@dataclass(frozen=True)
class Affinity:
    """Symmetric nonnegative query-query weights with a zero diagonal."""

    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.float64))
        w = self.weights
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("affinity must be square")
        if (w < 0).any():
            raise ValueError("affinity weights must be nonnegative")
        if np.abs(w - w.T).max(initial=0.0) > 1e-12:
            raise ValueError("affinity must be symmetric")
        if w.size and np.abs(np.diag(w)).max() != 0.0:
            raise ValueError("affinity diagonal must be zero")


@dataclass(frozen=True)
class SoftAssignment:
    rows: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rows", np.asarray(self.rows, dtype=np.float64))
        r = self.rows
        if r.ndim != 2:
            raise ValueError("assignment must be (queries, slots)")
        if (r < 0).any() or (r > 1).any() or np.isnan(r).any():
            raise ValueError("assignment entries must lie in [0, 1]")
        if np.abs(r.sum(axis=1) - 1.0).max(initial=0.0) > 1e-9:
            raise ValueError("assignment rows must sum to 1")


@dataclass(frozen=True)
class LaplacianConfig:
    lam: float = 1.0
    knn: int = 3
    max_iters: int = 20
    tol: float = 1e-6

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.knn < 0 or self.max_iters < 1 or self.tol <= 0:
            raise ValueError("bad laplacian config")


@dataclass(frozen=True)
class LaplacianResult:
    assignment: SoftAssignment
    predictions: np.ndarray
    objective_trace: np.ndarray = field(repr=False)


def build_affinity(query_vectors, knn: int) -> Affinity:
    """knn-sparsified RBF affinity, self-tuned by the mean knn-th distance.

    w_qp = exp(-||z_q - z_p||^2 / sigma^2) when p is among q's knn nearest
    neighbors, 0 otherwise; symmetrized as (W + W^T)/2.  sigma is the mean
    distance to the knn-th neighbor, replaced by 1 when it degenerates to 0.
    """
    z = np.atleast_2d(np.asarray(query_vectors, dtype=np.float64))
    nq = z.shape[0]
    k = min(knn, nq - 1)
    if nq == 1 or k <= 0:
        return Affinity(np.zeros((nq, nq)))
    d2 = pairwise_sqdist(z, z)
    np.fill_diagonal(d2, np.inf)
    order = np.argsort(d2, axis=1, kind="stable")[:, :k]
    kth = np.sqrt(d2[np.arange(nq), order[:, -1]])
    sigma = float(kth.mean())
    if not np.isfinite(sigma) or sigma <= 0.0:
        sigma = 1.0
    w = np.zeros((nq, nq))
    rows = np.repeat(np.arange(nq), k)
    cols = order.ravel()
    w[rows, cols] = np.exp(-d2[rows, cols] / (sigma * sigma))
    w = 0.5 * (w + w.T)
    np.fill_diagonal(w, 0.0)
    return Affinity(w)


def energy(assignment: SoftAssignment, prototypes: PrototypeSet, query_vectors,
           affinity: Affinity, lam: float) -> float:
    """The transductive objective E(Y) = unary + lambda/2 * Laplacian term."""
    z = np.atleast_2d(np.asarray(query_vectors, dtype=np.float64))
    y = assignment.rows
    d = pairwise_sqdist(z, prototypes.prototypes)
    unary = float((y * d).sum())
    sq = (y * y).sum(axis=1)
    pair = sq[:, None] + sq[None, :] - 2.0 * (y @ y.T)
    return unary + lam * 0.25 * float((affinity.weights * pair).sum())


def _relaxed_objective(y, d, w, lam):
    ent = float(np.sum(y * np.log(np.maximum(y, 1e-300))))
    return float((y * d).sum()) + ent - 0.5 * lam * float((w * (y @ y.T)).sum())


def _color_blocks(w):
    """Greedy graph coloring; same-color rows share no affinity edge."""
    nq = w.shape[0]
    colors = np.full(nq, -1, dtype=np.int64)
    for q in range(nq):
        used = set(colors[p] for p in np.nonzero(w[q])[0] if colors[p] >= 0)
        c = 0
        while c in used:
            c += 1
        colors[q] = c
    return [np.nonzero(colors == c)[0] for c in range(int(colors.max()) + 1)]


def laplacian_infer(prototypes: PrototypeSet, query_vectors,
                    config: LaplacianConfig = LaplacianConfig()) -> LaplacianResult:
    """Iterate colored-block bound updates until the assignment stabilizes.

    Returns the soft assignment, hard predictions (row argmax, ties to the
    lowest slot) and the relaxed-objective trace, one entry per sweep
    starting at the softmax(-d) initialization.  The trace is monotone
    non-increasing by construction.
    """
    z = np.atleast_2d(np.asarray(query_vectors, dtype=np.float64))
    if z.shape[0] < 1:
        raise ValueError("need at least one query")
    d = pairwise_sqdist(z, prototypes.prototypes)
    w = build_affinity(z, config.knn).weights
    lam = config.lam
    y = softmax(-d, axis=1)
    trace = [_relaxed_objective(y, d, w, lam)]
    if not np.isfinite(trace[0]):
        raise RuntimeError(f"non-finite relaxed objective at initialization "
                           f"(lambda={lam}, max_d={d.max()})")
    if lam > 0.0 and w.any():
        blocks = _color_blocks(w)
        for _ in range(config.max_iters):
            y_prev = y.copy()
            for rows in blocks:
                y[rows] = softmax(-d[rows] + lam * (w[rows] @ y), axis=1)
            g = _relaxed_objective(y, d, w, lam)
            if not np.isfinite(g):
                raise RuntimeError(f"non-finite relaxed objective at sweep {len(trace)} "
                                   f"(lambda={lam}, sigma-scaled affinity max={w.max()})")
            trace.append(g)
            if np.abs(y - y_prev).max() < config.tol:
                break
    return LaplacianResult(SoftAssignment(y), np.argmax(y, axis=1).astype(np.int64),
                           np.asarray(trace))
