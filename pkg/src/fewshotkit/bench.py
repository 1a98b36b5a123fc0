"""Meta-testing engine: many-episode benchmarks with 95% confidence intervals.

Episode i always uses derive_episode_seed(base_seed, i), and every episode
is a pure function of (dataset, spec, seed), so results are bit-identical
whatever the worker count or scheduling order.  Accuracy is computed per
episode (correct queries / K*Q) and then averaged, the standard few-shot
reporting convention.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .episodes import EpisodeSpec, sample_episode
from .heads import emd as emd_head
from .heads import laplacian as lap_head
from .heads import metric as metric_head
from .rng import derive_episode_seed
from .store import ClassIndex, EmbeddingDataset, build_class_index

HEADS = ("protonet", "simpleshot", "laplacianshot", "deepemd", "deepbdc")
VECTOR_HEADS = ("protonet", "simpleshot", "laplacianshot")
GRID_HEADS = ("deepemd", "deepbdc")


class ResultFormatError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    head: str
    spec: EpisodeSpec
    episodes: int
    base_seed: int = 0
    lam: float = 1.0
    knn: int = 3
    tau: float = 1.0
    transform: str = "none"
    workers: int = 1

    def __post_init__(self):
        if self.head not in HEADS:
            raise ValueError(f"unknown head {self.head!r}; choose from {HEADS}")
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.transform not in metric_head.TRANSFORM_KINDS:
            raise ValueError(f"unknown transform {self.transform!r}")
        if self.lam < 0 or self.knn < 0 or self.tau <= 0:
            raise ValueError("head parameter out of range")

    def params(self) -> dict:
        if self.head == "laplacianshot":
            return {"lambda": self.lam, "knn": self.knn}
        if self.head == "deepbdc":
            return {"tau": self.tau}
        if self.head == "simpleshot":
            return {"transform": self.transform}
        return {}


@dataclass(frozen=True)
class BenchmarkResult:
    dataset: str
    head: str
    ways: int
    shots: int
    queries: int
    episodes: int
    seed: int
    params: dict
    per_episode: np.ndarray = field(repr=False)
    mean_acc: float
    ci95: float
    wall_s: float
    version: str = __version__

    def to_json_obj(self) -> dict:
        return {"dataset": self.dataset, "head": self.head, "ways": self.ways,
                "shots": self.shots, "queries": self.queries, "episodes": self.episodes,
                "seed": self.seed, "params": self.params,
                "mean_acc": self.mean_acc, "ci95": self.ci95,
                "per_episode": [float(a) for a in self.per_episode],
                "wall_s": self.wall_s, "version": self.version}


def confidence_interval(values) -> tuple:
    """(mean, 1.96 * s / sqrt(n)) with the (n-1)-denominator deviation s."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("empty value list")
    if v.size == 1:
        return float(v[0]), 0.0
    return float(v.mean()), float(1.96 * v.std(ddof=1) / math.sqrt(v.size))


def _pooled_view(dataset: EmbeddingDataset, rows: np.ndarray) -> np.ndarray:
    """(n, C) float64 vectors; grid records are mean-pooled over positions."""
    x = dataset.embeddings[rows].astype(np.float64)
    shape = dataset.shape
    if shape.positions > 1:
        x = x.reshape(-1, shape.positions, shape.dim).mean(axis=1)
    return x


def _grid_view(dataset: EmbeddingDataset, rows: np.ndarray) -> np.ndarray:
    """(n, positions, C) float64 node stacks; pooled records become 1x1 grids."""
    x = dataset.embeddings[rows].astype(np.float64)
    return x.reshape(-1, dataset.shape.positions, dataset.shape.dim)


def _batched_bdc(grids: np.ndarray) -> np.ndarray:
    """Double-centered channel-distance matrices for a stack of grids.

    Matches heads.bdc.bdc_matrix record by record; batched for speed.
    """
    cols = np.swapaxes(grids, 1, 2)  # (n, C, positions)
    sq = (cols * cols).sum(axis=2)
    d2 = sq[:, :, None] + sq[:, None, :] - 2.0 * np.einsum("ncp,nkp->nck", cols, cols)
    np.maximum(d2, 0.0, out=d2)
    d = np.sqrt(d2)
    n, c, _ = d.shape
    idx = np.arange(c)
    d[:, idx, idx] = 0.0
    d = 0.5 * (d + np.swapaxes(d, 1, 2))
    row = d.mean(axis=2, keepdims=True)
    col = d.mean(axis=1, keepdims=True)
    a = d - row - col + d.mean(axis=(1, 2), keepdims=True)
    return 0.5 * (a + np.swapaxes(a, 1, 2))


def _episode_accuracy(dataset: EmbeddingDataset, index: ClassIndex, config: RunConfig,
                      episode_idx: int, base_mean) -> float:
    spec = config.spec
    ep = sample_episode(dataset, index, spec, derive_episode_seed(config.base_seed, episode_idx))
    k, n, q = spec.ways, spec.shots, spec.queries_per_class
    truth = ep.query_slots
    # the reshapes below group support records by slot-major blocks
    assert np.array_equal(ep.support_slots, np.repeat(np.arange(k), n))
    if config.head in VECTOR_HEADS:
        xs = _pooled_view(dataset, ep.support_rows).reshape(k, n, -1)
        xq = _pooled_view(dataset, ep.query_rows)
        if config.head == "protonet":
            protos = metric_head.compute_prototypes(xs)
            preds = np.argmax(metric_head.protonet_posteriors(protos, xq), axis=1)
        elif config.head == "simpleshot":
            transform = metric_head.FeatureTransform(config.transform, base_mean)
            preds = metric_head.simpleshot_predictions(xs, xq, transform)
        else:
            protos = metric_head.compute_prototypes(xs)
            cfg = lap_head.LaplacianConfig(lam=config.lam, knn=config.knn)
            preds = lap_head.laplacian_infer(protos, xq, cfg).predictions
    else:
        gs = _grid_view(dataset, ep.support_rows)
        gq = _grid_view(dataset, ep.query_rows)
        if config.head == "deepemd":
            reps = [emd_head.FeatureGrid(gs[s * n:(s + 1) * n].mean(axis=0)) for s in range(k)]
            preds = np.empty(truth.size, dtype=np.int64)
            for i in range(truth.size):
                query = emd_head.FeatureGrid(gq[i])
                sims = [emd_head.emd_similarity(rep, query) for rep in reps]
                preds[i] = int(np.argmax(sims))
        else:
            a_support = _batched_bdc(gs)
            protos = a_support.reshape(k, n, *a_support.shape[1:]).mean(axis=1)
            a_query = _batched_bdc(gq)
            scores = np.einsum("qij,sij->qs", a_query, protos)
            preds = np.argmax(scores, axis=1)
    return float(np.mean(preds == truth))


_WORKER = {}


def _init_worker(dataset, config, base_mean):
    _WORKER["dataset"] = dataset
    _WORKER["index"] = build_class_index(dataset)
    _WORKER["config"] = config
    _WORKER["base_mean"] = base_mean


def _eval_in_worker(episode_idx: int) -> float:
    return _episode_accuracy(_WORKER["dataset"], _WORKER["index"], _WORKER["config"],
                             episode_idx, _WORKER["base_mean"])


def run_benchmark(dataset: EmbeddingDataset, config: RunConfig) -> BenchmarkResult:
    """Evaluate one head over config.episodes sampled episodes."""
    index = build_class_index(dataset)
    need = config.spec.shots + config.spec.queries_per_class
    eligible = sum(1 for ids in index.by_class if len(ids) >= need)
    if eligible < config.spec.ways:
        from .episodes import InsufficientClassesError
        raise InsufficientClassesError(
            f"insufficient classes: {eligible} of {dataset.num_classes} classes hold "
            f">= {need} records, need {config.spec.ways}")
    base_mean = None
    if config.head == "simpleshot" and config.transform in ("center", "center_then_l2"):
        base_mean = _pooled_view(dataset, np.arange(len(dataset))).mean(axis=0)
    t0 = time.perf_counter()
    if config.workers > 1:
        chunk = max(1, config.episodes // (4 * config.workers))
        with ProcessPoolExecutor(max_workers=config.workers, initializer=_init_worker,
                                 initargs=(dataset, config, base_mean)) as pool:
            accs = list(pool.map(_eval_in_worker, range(config.episodes), chunksize=chunk))
    else:
        accs = [_episode_accuracy(dataset, index, config, i, base_mean)
                for i in range(config.episodes)]
    wall = time.perf_counter() - t0
    per_episode = np.asarray(accs, dtype=np.float64)
    mean, ci = confidence_interval(per_episode)
    return BenchmarkResult(dataset=dataset.name, head=config.head,
                           ways=config.spec.ways, shots=config.spec.shots,
                           queries=config.spec.queries_per_class,
                           episodes=config.episodes, seed=config.base_seed,
                           params=config.params(), per_episode=per_episode,
                           mean_acc=mean, ci95=ci, wall_s=wall)


_RESULT_KEYS = {"dataset", "head", "ways", "shots", "queries", "episodes", "seed",
                "params", "mean_acc", "ci95", "per_episode", "wall_s", "version"}


def persist_result(result: BenchmarkResult, path):
    """Append one JSON object per line."""
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(result.to_json_obj()) + "\n")


def load_results(path) -> list:
    """Parse a JSONL results file; errors name the offending line."""
    path = Path(path)
    if not path.exists():
        raise ResultFormatError(f"no such file: {path}")
    results = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ResultFormatError(f"malformed JSONL at line {lineno}: {exc}") from None
            missing = _RESULT_KEYS - set(obj)
            if missing:
                raise ResultFormatError(
                    f"malformed JSONL at line {lineno}: missing {sorted(missing)}")
            results.append(BenchmarkResult(
                dataset=obj["dataset"], head=obj["head"], ways=obj["ways"],
                shots=obj["shots"], queries=obj["queries"], episodes=obj["episodes"],
                seed=obj["seed"], params=obj["params"],
                per_episode=np.asarray(obj["per_episode"], dtype=np.float64),
                mean_acc=obj["mean_acc"], ci95=obj["ci95"], wall_s=obj["wall_s"],
                version=obj["version"]))
    return results
