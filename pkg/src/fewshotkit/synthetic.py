"""Synthetic embedding datasets for demos, tests and calibration runs.

Gaussian class clouds with a controlled ratio between class-mean
separation and within-class deviation, plus degenerate datasets
(point-mass classes, label-independent noise) used as statistical
oracles: point-mass classes force accuracy 1.0, independent labels force
accuracy 1/K.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from .store import (KIND_GRID, KIND_POOLED, EmbeddingDataset, EmbeddingShape,
                    save_dataset)


def class_means(n_classes: int, dim: int, min_separation: float, rng) -> np.ndarray:
    """Random directions scaled so the minimum pairwise distance is exact."""
    means = rng.normal(size=(n_classes, dim))
    means /= np.linalg.norm(means, axis=1, keepdims=True)
    diff = means[:, None, :] - means[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    np.fill_diagonal(dist, np.inf)
    return means * (min_separation / dist.min())


def gaussian_pooled(name: str, n_classes: int, per_class: int, dim: int,
                    separation: float = 5.0, sigma: float = 1.0,
                    seed: int = 0) -> EmbeddingDataset:
    """Pooled vectors x = mu_class + N(0, sigma^2 I).

    ``separation`` is the ratio between the minimum pairwise distance of
    the class means and the within-class scatter radius sigma*sqrt(dim)
    (the expected deviation norm of a sample from its class mean).
    """
    rng = np.random.default_rng(seed)
    means = class_means(n_classes, dim, separation * sigma * np.sqrt(dim), rng)
    labels = np.repeat(np.arange(n_classes), per_class)
    emb = means[labels] + rng.normal(scale=sigma, size=(labels.size, dim))
    return EmbeddingDataset(name, [f"class_{c}" for c in range(n_classes)],
                            EmbeddingShape(KIND_POOLED, dim),
                            np.arange(labels.size), labels, emb.astype(np.float32))


def gaussian_grid(name: str, n_classes: int, per_class: int, channels: int,
                  height: int, width: int, separation: float = 5.0,
                  sigma: float = 1.0, seed: int = 0) -> EmbeddingDataset:
    """Grid records whose every node is mu_class + N(0, sigma^2 I) over channels.

    ``separation`` is measured as in :func:`gaussian_pooled`, against the
    per-node scatter radius sigma*sqrt(channels).
    """
    rng = np.random.default_rng(seed)
    means = class_means(n_classes, channels, separation * sigma * np.sqrt(channels), rng)
    labels = np.repeat(np.arange(n_classes), per_class)
    positions = height * width
    nodes = means[labels][:, None, :] + rng.normal(
        scale=sigma, size=(labels.size, positions, channels))
    return EmbeddingDataset(name, [f"class_{c}" for c in range(n_classes)],
                            EmbeddingShape(KIND_GRID, channels, height, width),
                            np.arange(labels.size), labels,
                            nodes.reshape(labels.size, positions * channels).astype(np.float32))


def point_mass(name: str, n_classes: int, per_class: int, dim: int,
               seed: int = 0) -> EmbeddingDataset:
    """Each class is a single repeated point: perfectly separable by any head."""
    rng = np.random.default_rng(seed)
    points = class_means(n_classes, dim, 10.0, rng)
    labels = np.repeat(np.arange(n_classes), per_class)
    emb = points[labels].astype(np.float32)
    return EmbeddingDataset(name, [f"class_{c}" for c in range(n_classes)],
                            EmbeddingShape(KIND_POOLED, dim),
                            np.arange(labels.size), labels, emb)


def label_noise(name: str, n_classes: int, per_class: int, dim: int,
                seed: int = 0) -> EmbeddingDataset:
    """Labels carry no information: embeddings are i.i.d. regardless of class."""
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(n_classes), per_class)
    emb = rng.normal(size=(labels.size, dim)).astype(np.float32)
    return EmbeddingDataset(name, [f"class_{c}" for c in range(n_classes)],
                            EmbeddingShape(KIND_POOLED, dim),
                            np.arange(labels.size), labels, emb)


def write_demo_fixtures(out_dir) -> list:
    """Write the two small demo datasets bundled with the package."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    pooled = gaussian_pooled("demo_pooled", n_classes=8, per_class=30, dim=32,
                             separation=0.8, seed=20240501)
    p = out_dir / "demo_pooled.fseb"
    save_dataset(pooled, p)
    paths.append(p)
    grid = gaussian_grid("demo_grid", n_classes=8, per_class=24, channels=16,
                         height=3, width=3, separation=0.8, seed=20240502)
    g = out_dir / "demo_grid.fseb"
    save_dataset(grid, g)
    paths.append(g)
    return paths


def demo_fixture_path(kind: str = "pooled") -> Path:
    """Path of a bundled demo dataset (kind 'pooled' or 'grid')."""
    return Path(__file__).parent / "data" / f"demo_{kind}.fseb"


def main(argv=None):
    ap = argparse.ArgumentParser(description="generate synthetic FSEB datasets")
    ap.add_argument("out_dir", help="directory for the generated .fseb files")
    args = ap.parse_args(argv)
    for p in write_demo_fixtures(args.out_dir):
        print(p)


if __name__ == "__main__":
    main()
