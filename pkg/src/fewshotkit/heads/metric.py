"""Nearest-prototype and nearest-class-mean inference.

The prototype head turns squared Euclidean distances to per-slot mean
vectors into a softmax posterior; the nearest-neighbor head predicts the
slot of the closest (optionally centered and/or L2-normalized) class
mean.  With no feature transform the two heads agree on every decision,
since softmax is monotone in the negated distance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

# -log(0) is reported as this finite cap, i.e. probabilities are floored
# at exp(-LOSS_CAP) so aggregate loss statistics stay finite.
LOSS_CAP = 50.0

TRANSFORM_KINDS = ("none", "center", "l2", "center_then_l2")


@dataclass(frozen=True)
class PrototypeSet:
    """Per-slot mean vectors, aligned with the episode's slot order."""

    prototypes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "prototypes",
                           np.asarray(self.prototypes, dtype=np.float64))
        if self.prototypes.ndim != 2 or self.prototypes.shape[0] < 2:
            raise ValueError("need a (K>=2, dim) prototype matrix")

    @property
    def ways(self) -> int:
        return self.prototypes.shape[0]

    @property
    def dim(self) -> int:
        return self.prototypes.shape[1]


@dataclass(frozen=True)
class Posterior:
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", np.asarray(self.probs, dtype=np.float64))
        p = self.probs
        if p.ndim != 1 or np.isnan(p).any() or (p < 0).any():
            raise ValueError("posterior must be a nonnegative vector")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"posterior sums to {p.sum()}, not 1")


@dataclass(frozen=True)
class FeatureTransform:
    """Optional embedding post-processing applied before nearest-mean search."""

    kind: str = "none"
    base_mean: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in TRANSFORM_KINDS:
            raise ValueError(f"unknown transform {self.kind!r}")
        if self.kind in ("center", "center_then_l2") and self.base_mean is None:
            raise ValueError(f"transform {self.kind!r} requires base_mean")
        if self.base_mean is not None:
            object.__setattr__(self, "base_mean",
                               np.asarray(self.base_mean, dtype=np.float64))


def compute_prototypes(episode_support: Sequence[np.ndarray]) -> PrototypeSet:
    """Arithmetic mean of each slot's support vectors."""
    protos = []
    dim = None
    for slot, vecs in enumerate(episode_support):
        v = np.asarray(vecs, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1:
            raise ValueError(f"slot {slot} needs at least one support vector")
        if dim is None:
            dim = v.shape[1]
        elif v.shape[1] != dim:
            raise ValueError(f"dimension mismatch in slot {slot}")
        protos.append(v.mean(axis=0))
    return PrototypeSet(np.vstack(protos))


def pairwise_sqdist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, (len(a), len(b))."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * (a @ b.T)
    np.maximum(d, 0.0, out=d)
    return d


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax (max subtraction)."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def protonet_posteriors(prototypes: PrototypeSet, queries: np.ndarray) -> np.ndarray:
    """Posterior matrix (n_queries, K) from softmax of negated squared distances."""
    q = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if q.shape[1] != prototypes.dim:
        raise ValueError(f"query dim {q.shape[1]} != prototype dim {prototypes.dim}")
    return softmax(-pairwise_sqdist(q, prototypes.prototypes), axis=1)


def classify_protonet(prototypes: PrototypeSet, query: np.ndarray) -> Posterior:
    return Posterior(protonet_posteriors(prototypes, query)[0])


def nll_loss(posterior: Posterior, true_slot: int) -> float:
    """Negative log probability of the true slot, capped at LOSS_CAP."""
    if not 0 <= true_slot < posterior.probs.size:
        raise ValueError("true_slot out of range")
    p = float(posterior.probs[true_slot])
    return float(min(-np.log(max(p, np.exp(-LOSS_CAP))), LOSS_CAP))


def protonet_loss(posterior: Posterior, true_slot: int) -> float:
    return nll_loss(posterior, true_slot)


def apply_transform(vectors, transform: FeatureTransform) -> np.ndarray:
    """Apply the configured centering / L2 steps; zero vectors pass through L2."""
    v = np.atleast_2d(np.asarray(vectors, dtype=np.float64)).copy()
    if transform.kind in ("center", "center_then_l2"):
        if transform.base_mean.shape != (v.shape[1],):
            raise ValueError("base_mean dimension mismatch")
        v -= transform.base_mean
    if transform.kind in ("l2", "center_then_l2"):
        norms = np.linalg.norm(v, axis=1)
        nz = norms > 0
        v[nz] /= norms[nz, None]
    return v


def classify_simpleshot(episode_support: Sequence[np.ndarray], query: np.ndarray,
                        transform: FeatureTransform = FeatureTransform()) -> int:
    """Slot of the nearest transformed class mean; ties go to the lowest slot."""
    means = compute_prototypes(episode_support).prototypes
    means_t = apply_transform(means, transform)
    query_t = apply_transform(np.atleast_2d(np.asarray(query, dtype=np.float64)), transform)
    if query_t.shape[1] != means_t.shape[1]:
        raise ValueError("query dimension mismatch")
    return int(np.argmin(pairwise_sqdist(query_t, means_t)[0]))


def simpleshot_predictions(episode_support: Sequence[np.ndarray], queries: np.ndarray,
                           transform: FeatureTransform = FeatureTransform()) -> np.ndarray:
    """Vectorized nearest-mean predictions for a batch of queries."""
    means_t = apply_transform(compute_prototypes(episode_support).prototypes, transform)
    queries_t = apply_transform(queries, transform)
    return np.argmin(pairwise_sqdist(queries_t, means_t), axis=1)
