import numpy as np
import pytest

from conftest import brute_force_min_cost, lp_vertex_optimum, nw_corner_plan
from fewshotkit.transport import (TransportError, TransportInstance,
                                  TransportPlan, normalize_weights,
                                  solve_transport)


def test_single_cell():
    plan = solve_transport(TransportInstance([1.0], [1.0], [[0.7]]))
    assert np.allclose(plan.flows, [[1.0]])
    assert plan.total_cost == pytest.approx(0.7)


def test_zero_cost_matching():
    plan = solve_transport(TransportInstance([0.5, 0.5], [0.5, 0.5],
                                             [[0.0, 1.0], [1.0, 0.0]]))
    assert plan.total_cost == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(np.diag(plan.flows), 0.5)


def test_quarter_rational_matches_enumeration():
    rng = np.random.default_rng(0)
    for _ in range(100):
        m, k = rng.integers(1, 4, size=2)
        total = int(rng.integers(max(m, k), 9))
        sup = np.diff(np.concatenate(([0], np.sort(rng.integers(0, total + 1, m - 1)), [total])))
        dem = np.diff(np.concatenate(([0], np.sort(rng.integers(0, total + 1, k - 1)), [total])))
        costs = rng.uniform(0, 1, size=(m, k))
        plan = solve_transport(TransportInstance(sup / 4, dem / 4, costs))
        oracle = brute_force_min_cost(list(sup), list(dem), costs) / 4
        assert plan.total_cost == pytest.approx(oracle, abs=1e-6)


def test_continuous_matches_vertex_enumeration():
    rng = np.random.default_rng(1)
    for _ in range(30):
        m, k = rng.integers(2, 4, size=2)
        s = rng.uniform(0.1, 1, m)
        d = rng.uniform(0.1, 1, k)
        s /= s.sum()
        d /= d.sum()
        costs = rng.uniform(-1, 2, size=(m, k))
        plan = solve_transport(TransportInstance(s, d, costs))
        assert plan.total_cost == pytest.approx(lp_vertex_optimum(s, d, costs), abs=1e-9)


def test_feasibility_random():
    rng = np.random.default_rng(2)
    for _ in range(200):
        m, k = rng.integers(1, 11, size=2)
        s = rng.uniform(0, 1, m)
        d = rng.uniform(0, 1, k)
        s /= s.sum()
        d /= d.sum()
        plan = solve_transport(TransportInstance(s, d, rng.uniform(0, 2, (m, k))))
        assert np.abs(plan.flows.sum(axis=1) - s).max() < 1e-7
        assert np.abs(plan.flows.sum(axis=0) - d).max() < 1e-7
        assert (plan.flows >= 0).all()
        assert int((plan.flows > 0).sum()) <= m + k - 1


def test_cost_lower_bound_vs_random_feasible_plans():
    rng = np.random.default_rng(3)
    for _ in range(10):
        m, k = rng.integers(2, 7, size=2)
        s = rng.uniform(0.1, 1, m)
        d = rng.uniform(0.1, 1, k)
        s /= s.sum()
        d /= d.sum()
        costs = rng.uniform(0, 3, (m, k))
        best = solve_transport(TransportInstance(s, d, costs)).total_cost
        for _ in range(100):
            plan = nw_corner_plan(s, d, rng.permutation(m), rng.permutation(k))
            assert np.abs(plan.sum(axis=1) - s).max() < 1e-9
            assert best <= float((plan * costs).sum()) + 1e-9


def test_cost_shift_equivariance():
    rng = np.random.default_rng(4)
    s = rng.uniform(0.1, 1, 4)
    d = rng.uniform(0.1, 1, 5)
    s /= s.sum()
    d /= d.sum()
    costs = rng.uniform(0, 1, (4, 5))
    gamma = 2.75
    base = solve_transport(TransportInstance(s, d, costs))
    shifted = solve_transport(TransportInstance(s, d, costs + gamma))
    assert shifted.total_cost == pytest.approx(base.total_cost + gamma * 1.0, abs=1e-9)
    assert np.allclose(base.flows, shifted.flows, atol=1e-12)


def test_degenerate_instances():
    # zero-weight rows and repeated costs force degenerate pivots
    plan = solve_transport(TransportInstance([0.0, 1.0, 0.0], [0.5, 0.5],
                                             [[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]]))
    assert plan.total_cost == pytest.approx(1.0)
    assert np.allclose(plan.flows.sum(axis=0), [0.5, 0.5])
    plan2 = solve_transport(TransportInstance([0.25, 0.25, 0.25, 0.25],
                                              [0.5, 0.5],
                                              np.zeros((4, 2))))
    assert plan2.total_cost == 0.0


def test_zero_mass_gives_zero_plan():
    plan = solve_transport(TransportInstance([0.0, 0.0], [0.0], [[1.0], [2.0]]))
    assert plan.total_cost == 0.0
    assert not plan.flows.any()


def test_unbalanced_rejected():
    with pytest.raises(TransportError, match="unbalanced"):
        solve_transport(TransportInstance([1.0], [0.5], [[1.0]]))


def test_invalid_instances_rejected():
    with pytest.raises(TransportError):
        TransportInstance([-0.1, 1.1], [1.0], [[1.0], [1.0]])
    with pytest.raises(TransportError):
        TransportInstance([1.0], [1.0], [[np.inf]])
    with pytest.raises(TransportError):
        TransportInstance([1.0, 1.0], [2.0], [[1.0]])


def test_normalize_weights():
    assert np.allclose(normalize_weights([2.0, 2.0]), [0.5, 0.5])
    assert np.allclose(normalize_weights([0.0, 0.0, 0.0]), [1 / 3] * 3)
    assert np.allclose(normalize_weights([1.0]), [1.0])
    with pytest.raises(ValueError, match="negative"):
        normalize_weights([1.0, -0.5])
    with pytest.raises(ValueError):
        normalize_weights([])


def test_plan_is_dataclass_with_cost():
    plan = solve_transport(TransportInstance([1.0], [1.0], [[0.3]]))
    assert isinstance(plan, TransportPlan)
    assert plan.total_cost == pytest.approx(0.3)
