"""K-way N-shot Q-query episode construction with deterministic seeding.

An episode picks K classes uniformly from the classes that hold at least
N + Q records, then draws N support and Q query records per class without
replacement.  All randomness comes from the portable SplitMix64 stream in
:mod:`fewshotkit.rng`, so a given (dataset, spec, seed) triple yields a
bit-identical episode on every platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import SplitMix64, derive_episode_seed  # noqa: F401  (re-exported)
from .store import ClassIndex, EmbeddingDataset


class InsufficientClassesError(ValueError):
    """Fewer eligible classes than the episode needs."""


@dataclass(frozen=True)
class EpisodeSpec:
    ways: int
    shots: int
    queries_per_class: int

    def __post_init__(self):
        if self.ways < 2:
            raise ValueError("ways must be >= 2")
        if self.shots < 1 or self.queries_per_class < 1:
            raise ValueError("shots and queries_per_class must be >= 1")


@dataclass(frozen=True)
class Episode:
    """One sampled task: slot c of the episode maps to dataset class class_map[c]."""

    class_map: tuple
    support_ids: np.ndarray
    support_slots: np.ndarray
    query_ids: np.ndarray
    query_slots: np.ndarray
    support_rows: np.ndarray
    query_rows: np.ndarray

    @property
    def ways(self) -> int:
        return len(self.class_map)


def sample_episode(dataset: EmbeddingDataset, index: ClassIndex,
                   spec: EpisodeSpec, seed: int) -> Episode:
    """Sample one episode.  Classes with fewer than N+Q records are excluded."""
    need = spec.shots + spec.queries_per_class
    eligible = [c for c, ids in enumerate(index.by_class) if len(ids) >= need]
    if len(eligible) < spec.ways:
        deficient = [dataset.class_names[c] for c, ids in enumerate(index.by_class)
                     if len(ids) < need]
        raise InsufficientClassesError(
            f"insufficient samples: {len(eligible)} classes have >= {need} records, "
            f"need {spec.ways}; deficient classes: {', '.join(deficient) or 'none'}")
    rng = SplitMix64(seed)
    class_map = tuple(rng.sample(eligible, spec.ways))
    sup_ids, sup_slots, qry_ids, qry_slots = [], [], [], []
    for slot, cls in enumerate(class_map):
        drawn = rng.sample(index.by_class[cls], need)
        sup_ids.extend(drawn[:spec.shots])
        sup_slots.extend([slot] * spec.shots)
        qry_ids.extend(drawn[spec.shots:])
        qry_slots.extend([slot] * spec.queries_per_class)
    return Episode(
        class_map=class_map,
        support_ids=np.array(sup_ids, dtype=np.uint64),
        support_slots=np.array(sup_slots, dtype=np.int64),
        query_ids=np.array(qry_ids, dtype=np.uint64),
        query_slots=np.array(qry_slots, dtype=np.int64),
        support_rows=np.array([dataset.row_of_id(i) for i in sup_ids], dtype=np.int64),
        query_rows=np.array([dataset.row_of_id(i) for i in qry_ids], dtype=np.int64),
    )


def check_disjoint_classes(train_class_names, test_class_names) -> bool:
    """True iff the two class-name sets share nothing (meta-test hygiene)."""
    return not (set(train_class_names) & set(test_class_names))
