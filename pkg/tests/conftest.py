"""Shared test helpers: independent oracles and small data generators.

The oracles here re-derive expected values by enumeration or naive loops
and never call the code paths they check.
"""

import itertools

import numpy as np
import pytest

from fewshotkit.transport import TransportInstance, solve_transport


@pytest.fixture(scope="session", autouse=True)
def warm_transport_kernel():
    # first solve pays the numba compile; keep it out of timed assertions
    solve_transport(TransportInstance([1.0], [1.0], [[0.5]]))


def brute_force_min_cost(supplies_int, demands_int, costs):
    """Enumerate every integer flow matrix with the given marginals."""
    m, k = len(supplies_int), len(demands_int)
    costs = np.asarray(costs, dtype=float)
    best = [np.inf]

    def recurse(cell, rows, cols, acc):
        if cell == m * k:
            if not any(rows) and not any(cols):
                best[0] = min(best[0], acc)
            return
        i, j = divmod(cell, k)
        hi = min(rows[i], cols[j])
        lo = rows[i] if j == k - 1 else 0
        if lo > hi:
            return
        for x in range(lo, hi + 1):
            rows[i] -= x
            cols[j] -= x
            recurse(cell + 1, rows, cols, acc + x * costs[i, j])
            rows[i] += x
            cols[j] += x

    recurse(0, list(supplies_int), list(demands_int), 0.0)
    return float(best[0])


def lp_vertex_optimum(supplies, demands, costs):
    """Exact LP optimum by enumerating basis trees of the bipartite graph.

    Every vertex of the transportation polytope is the basic solution of a
    spanning tree over the m supply and k demand nodes; the optimum is the
    cheapest feasible vertex.  Works for continuous weights, unlike the
    integer enumeration oracle.
    """
    s = np.asarray(supplies, dtype=float)
    d = np.asarray(demands, dtype=float)
    c = np.asarray(costs, dtype=float)
    m, k = s.size, d.size
    n = m + k
    cells = [(i, j) for i in range(m) for j in range(k)]
    best = np.inf
    for tree in itertools.combinations(cells, n - 1):
        parent = list(range(n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        acyclic = True
        for (i, j) in tree:
            ra, rb = find(i), find(m + j)
            if ra == rb:
                acyclic = False
                break
            parent[ra] = rb
        if not acyclic or len({find(v) for v in range(n)}) != 1:
            continue
        flows = _tree_basic_solution(s, d, tree, m, k)
        if flows is None or flows.min() < -1e-9:
            continue
        cost = float((np.maximum(flows, 0.0) * c).sum())
        best = min(best, cost)
    return best


def _tree_basic_solution(s, d, tree, m, k):
    n = m + k
    rem = np.concatenate([s, d]).astype(float)
    incident = {v: [] for v in range(n)}
    for e, (i, j) in enumerate(tree):
        incident[i].append(e)
        incident[m + j].append(e)
    alive = [True] * len(tree)
    deg = {v: len(incident[v]) for v in range(n)}
    flows = np.zeros((m, k))
    order = [v for v in range(n) if deg[v] == 1]
    while order:
        v = order.pop()
        if deg[v] != 1:
            continue
        e = next((e for e in incident[v] if alive[e]), None)
        if e is None:
            continue
        i, j = tree[e]
        w = m + j if v == i else i
        flows[i, j] = rem[v]
        rem[w] -= rem[v]
        rem[v] = 0.0
        alive[e] = False
        deg[v] -= 1
        deg[w] -= 1
        if deg[w] == 1:
            order.append(w)
    if any(alive):
        return None
    return flows


def nw_corner_plan(supplies, demands, row_order, col_order):
    """Feasible (not optimal) plan: north-west corner on permuted indices."""
    s = np.asarray(supplies, dtype=float)[list(row_order)].copy()
    d = np.asarray(demands, dtype=float)[list(col_order)].copy()
    m, k = s.size, d.size
    plan = np.zeros((m, k))
    i = j = 0
    while i < m and j < k:
        t = min(s[i], d[j])
        plan[i, j] = t
        s[i] -= t
        d[j] -= t
        if i == m - 1 and j == k - 1:
            break
        if i < m - 1 and (s[i] <= d[j] or j == k - 1):
            i += 1
        else:
            j += 1
    out = np.zeros_like(plan)
    out[np.ix_(list(row_order), list(col_order))] = plan
    return out


def random_episode_arrays(rng, ways=5, shots=5, queries=15, dim=16, spread=2.0):
    """Support slot arrays and query batch drawn around random class centers."""
    centers = rng.normal(scale=spread, size=(ways, dim))
    support = [centers[c] + rng.normal(size=(shots, dim)) for c in range(ways)]
    labels = np.repeat(np.arange(ways), queries)
    query = centers[labels] + rng.normal(size=(labels.size, dim))
    return support, query, labels


def hard_assignment(slots, ways):
    y = np.zeros((len(slots), ways))
    y[np.arange(len(slots)), slots] = 1.0
    return y
