"""Built-in oracle suites: independent brute-force checks of the numeric cores.

Each suite re-derives expected behavior by exhaustive enumeration or naive
loops, never by calling the code path under test, so a corrupted solver
fails the suite.  Exposed through the ``fsk selftest`` subcommand.
"""

from __future__ import annotations

import itertools

import numpy as np

from . import transport
from .heads import bdc as bdc_head
from .heads import emd as emd_head
from .heads import laplacian as lap_head
from .heads import metric as metric_head


def brute_force_transport_cost(supplies_int, demands_int, costs) -> float:
    """Minimum cost over all integer flow matrices with the given marginals."""
    m, k = len(supplies_int), len(demands_int)
    costs = np.asarray(costs, dtype=np.float64)
    best = [np.inf]

    def recurse(cell, rem_rows, rem_cols, acc):
        if cell == m * k:
            if not any(rem_rows) and not any(rem_cols):
                best[0] = min(best[0], acc)
            return
        i, j = divmod(cell, k)
        last_col = j == k - 1
        hi = min(rem_rows[i], rem_cols[j])
        lo = rem_rows[i] if last_col else 0
        if lo > hi:
            return
        for x in range(lo, hi + 1):
            rem_rows[i] -= x
            rem_cols[j] -= x
            recurse(cell + 1, rem_rows, rem_cols, acc + x * costs[i, j])
            rem_rows[i] += x
            rem_cols[j] += x

    recurse(0, list(supplies_int), list(demands_int), 0.0)
    return float(best[0])


def random_quarter_instance(rng, max_side=4, max_units=8):
    """Balanced instance whose weights are multiples of 1/4."""
    m = rng.integers(1, max_side + 1)
    k = rng.integers(1, max_side + 1)
    total = int(rng.integers(max(m, k), max_units + 1))
    sup = _random_composition(rng, total, m)
    dem = _random_composition(rng, total, k)
    costs = rng.uniform(0.0, 1.0, size=(m, k))
    return sup, dem, costs


def _random_composition(rng, total, parts):
    cuts = np.sort(rng.integers(0, total + 1, size=parts - 1))
    return np.diff(np.concatenate(([0], cuts, [total]))).astype(int)


def exhaustive_min_energy(prototypes, queries, affinity, lam):
    """Global minimizer of the transductive energy over hard assignments."""
    k = prototypes.prototypes.shape[0]
    nq = np.atleast_2d(queries).shape[0]
    best_energy, best_assign = np.inf, None
    for combo in itertools.product(range(k), repeat=nq):
        y = np.zeros((nq, k))
        y[np.arange(nq), combo] = 1.0
        e = lap_head.energy(lap_head.SoftAssignment(y), prototypes, queries, affinity, lam)
        if e < best_energy:
            best_energy, best_assign = e, np.array(combo)
    return best_assign, best_energy


def separated_instance(rng, n_queries, noise=0.25, sep=6.0, dim=4):
    """Two far-apart prototypes with tightly clustered queries."""
    protos = np.zeros((2, dim))
    protos[1, 0] = sep
    labels = rng.integers(0, 2, size=n_queries)
    queries = protos[labels] + rng.normal(scale=noise, size=(n_queries, dim))
    return metric_head.PrototypeSet(protos), queries


def suite_transport(n_instances=60, seed=11):
    rng = np.random.default_rng(seed)
    for t in range(n_instances):
        sup, dem, costs = random_quarter_instance(rng)
        plan = transport.solve_transport(
            transport.TransportInstance(sup / 4.0, dem / 4.0, costs))
        oracle = brute_force_transport_cost(sup, dem, costs) / 4.0
        if abs(plan.total_cost - oracle) > 1e-6:
            return False, f"instance {t}: solver {plan.total_cost} vs oracle {oracle}"
        if (np.abs(plan.flows.sum(axis=1) - sup / 4.0).max() > 1e-7
                or np.abs(plan.flows.sum(axis=0) - dem / 4.0).max() > 1e-7):
            return False, f"instance {t}: marginals violated"
    return True, f"{n_instances} instances vs enumeration oracle"


def suite_laplacian(n_instances=25, seed=7):
    rng = np.random.default_rng(seed)
    for t in range(n_instances):
        protos, queries = separated_instance(rng, n_queries=int(rng.integers(3, 7)))
        cfg = lap_head.LaplacianConfig(lam=1.0, knn=3)
        res = lap_head.laplacian_infer(protos, queries, cfg)
        if (np.diff(res.objective_trace) > 1e-8).any():
            return False, f"instance {t}: trace increased"
        affinity = lap_head.build_affinity(queries, cfg.knn)
        oracle_assign, _ = exhaustive_min_energy(protos, queries, affinity, cfg.lam)
        if not np.array_equal(res.predictions, oracle_assign):
            return False, f"instance {t}: {res.predictions} vs oracle {oracle_assign}"
        zero = lap_head.laplacian_infer(protos, queries,
                                        lap_head.LaplacianConfig(lam=0.0, knn=3))
        nearest = np.argmin(metric_head.pairwise_sqdist(queries, protos.prototypes), axis=1)
        if not np.array_equal(zero.predictions, nearest):
            return False, f"instance {t}: lambda=0 differs from nearest prototype"
    return True, f"{n_instances} instances vs exhaustive energy minimization"


def suite_double_centering(n_instances=40, seed=3):
    rng = np.random.default_rng(seed)
    for t in range(n_instances):
        positions = int(rng.integers(1, 7))
        channels = int(rng.integers(2, 9))
        grid = emd_head.FeatureGrid(rng.normal(size=(positions, channels)))
        a = bdc_head.bdc_matrix(grid).values
        # independent naive loops
        cols = grid.vectors.T
        d = np.zeros((channels, channels))
        for i in range(channels):
            for j in range(channels):
                d[i, j] = np.sqrt(((cols[i] - cols[j]) ** 2).sum())
        naive = np.zeros_like(d)
        for i in range(channels):
            for j in range(channels):
                naive[i, j] = d[i, j] - d[i, :].mean() - d[:, j].mean() + d.mean()
        if np.abs(a - naive).max() > 1e-9:
            return False, f"instance {t}: centered matrix differs from naive loops"
        if np.abs(a.sum(axis=0)).max() > 1e-6 or np.abs(a.sum(axis=1)).max() > 1e-6:
            return False, f"instance {t}: row/column sums do not vanish"
        if np.abs(a - a.T).max() > 1e-9:
            return False, f"instance {t}: asymmetry"
    return True, f"{n_instances} grids vs naive double-centering loops"


SUITES = (("transport-optimality", suite_transport),
          ("laplacian-descent", suite_laplacian),
          ("bdc-double-centering", suite_double_centering))


def run_selftest(report=print) -> bool:
    ok = True
    for name, fn in SUITES:
        try:
            passed, detail = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        report(f"{name}: {'PASS' if passed else 'FAIL'} ({detail})")
        ok = ok and passed
    return ok
