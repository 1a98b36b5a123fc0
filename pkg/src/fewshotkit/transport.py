"""Exact solver for the balanced transportation problem.

minimize    sum_ij c_ij * x_ij
subject to  sum_j x_ij = s_i,   sum_i x_ij = d_j,   x_ij >= 0

Algorithm: transportation simplex.  North-west-corner start, MODI (u-v)
pivoting with a Dantzig entering rule that switches to Bland's rule after
a pivot budget, and anti-degeneracy via an epsilon perturbation of the
supplies (eps * (i+1), balanced into the last demand).  The perturbation
only steers pivoting: once the optimal basis tree is known, flows are
recomputed from the *unperturbed* marginals by leaf elimination, so the
reported plan carries no epsilon residue.

Grids in this kit are small (H*W <= 100 nodes per side), so an exact LP
is cheap; the hot loop is compiled with numba because a benchmark run
performs hundreds of thousands of solves.  The basis tree is kept as
per-node edge lists updated incrementally at each pivot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

BALANCE_RTOL = 1e-9

# status codes from the kernel
_OK = 0
_PIVOT_LIMIT = 1
_BROKEN_BASIS = 2


class TransportError(ValueError):
    pass


@dataclass(frozen=True)
class TransportInstance:
    supplies: np.ndarray
    demands: np.ndarray
    costs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "supplies", np.asarray(self.supplies, dtype=np.float64))
        object.__setattr__(self, "demands", np.asarray(self.demands, dtype=np.float64))
        object.__setattr__(self, "costs", np.ascontiguousarray(self.costs, dtype=np.float64))
        s, d, c = self.supplies, self.demands, self.costs
        if s.ndim != 1 or d.ndim != 1 or c.shape != (s.size, d.size):
            raise TransportError("costs must be (len(supplies), len(demands))")
        if s.size == 0 or d.size == 0:
            raise TransportError("empty instance")
        if (s < 0).any() or (d < 0).any():
            raise TransportError("negative supply or demand")
        if not np.isfinite(c).all() or not np.isfinite(s).all() or not np.isfinite(d).all():
            raise TransportError("non-finite instance data")

    @property
    def total_mass(self) -> float:
        return float(self.supplies.sum())


@dataclass(frozen=True)
class TransportPlan:
    flows: np.ndarray
    total_cost: float


def normalize_weights(raw) -> np.ndarray:
    """Scale nonnegative weights to sum 1; an all-zero input becomes uniform."""
    w = np.asarray(raw, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a nonempty 1-D array")
    if (w < 0).any():
        raise ValueError("negative weight")
    total = w.sum()
    if total <= 0.0:
        return np.full(w.size, 1.0 / w.size)
    return w / total


def solve_transport(instance: TransportInstance) -> TransportPlan:
    """Globally optimal plan for a balanced instance."""
    s, d, c = instance.supplies, instance.demands, instance.costs
    ts, td = float(s.sum()), float(d.sum())
    scale = max(1.0, 0.5 * (ts + td))
    if abs(ts - td) > BALANCE_RTOL * scale:
        raise TransportError(f"unbalanced instance: supply {ts} vs demand {td}")
    if ts <= 0.0 and td <= 0.0:
        return TransportPlan(np.zeros((s.size, d.size)), 0.0)
    # One supplier or one demander admits a single feasible plan.
    if s.size == 1:
        flows = d.reshape(1, -1).copy()
        return TransportPlan(flows, float((c * flows).sum()))
    if d.size == 1:
        flows = s.reshape(-1, 1).copy()
        return TransportPlan(flows, float((c * flows).sum()))

    m, k = s.size, d.size
    eps = 1e-12 * scale
    opt_tol = 1e-11 * (1.0 + float(np.abs(c).max()))
    max_pivots = 400 * (m + k) + 1000
    bland_after = 100 * (m + k) + 200
    flows, _pivots, status = _solve_kernel(
        np.ascontiguousarray(s), np.ascontiguousarray(d), c,
        eps, opt_tol, max_pivots, bland_after)
    if status != _OK:
        raise TransportError(f"transportation simplex failed (status {status})")
    lowest = flows.min()
    if lowest < -1e-9 * scale:
        raise TransportError(f"infeasible basic solution (flow {lowest})")
    flows[flows < 0.0] = 0.0
    return TransportPlan(flows, float((c * flows).sum()))


@njit(cache=True)
def _solve_kernel(s, d, c, eps, opt_tol, max_pivots, bland_after):  # pragma: no cover
    m = s.shape[0]
    k = d.shape[0]
    n = m + k
    nb = n - 1

    # Perturbed marginals keep every basic flow strictly positive while pivoting.
    sp = s.copy()
    dp = d.copy()
    bump = 0.0
    for i in range(m):
        sp[i] += eps * (i + 1)
        bump += eps * (i + 1)
    dp[k - 1] += bump

    flows = np.zeros((m, k))
    basic = np.zeros((m, k), np.uint8)
    e_i = np.empty(nb, np.int64)
    e_j = np.empty(nb, np.int64)

    # North-west corner start: exactly m+k-1 basic cells forming a tree.
    rs = sp.copy()
    rd = dp.copy()
    i = 0
    j = 0
    ne = 0
    while True:
        t = rs[i] if rs[i] < rd[j] else rd[j]
        flows[i, j] = t
        basic[i, j] = 1
        e_i[ne] = i
        e_j[ne] = j
        ne += 1
        rs[i] -= t
        rd[j] -= t
        if i == m - 1 and j == k - 1:
            break
        if i == m - 1:
            j += 1
        elif j == k - 1:
            i += 1
        elif rs[i] <= rd[j]:
            i += 1
        else:
            j += 1

    # Per-node incident-edge lists (a tree node has at most n-1 edges).
    deg = np.zeros(n, np.int64)
    inc = np.empty((n, nb), np.int64)
    for e in range(nb):
        a = e_i[e]
        b = m + e_j[e]
        inc[a, deg[a]] = e
        deg[a] += 1
        inc[b, deg[b]] = e
        deg[b] += 1

    pot = np.empty(n)
    seen = np.empty(n, np.uint8)
    stack = np.empty(n, np.int64)
    par_edge = np.empty(n, np.int64)
    par_node = np.empty(n, np.int64)
    path = np.empty(n, np.int64)

    pivots = 0
    while True:
        # Duals u_i + v_j = c_ij over the tree, rooted at supply 0.
        for v in range(n):
            seen[v] = 0
        pot[0] = 0.0
        top = 0
        stack[top] = 0
        top += 1
        seen[0] = 1
        reached = 1
        while top > 0:
            top -= 1
            v = stack[top]
            for p in range(deg[v]):
                e = inc[v, p]
                w = m + e_j[e] if v == e_i[e] else e_i[e]
                if seen[w] == 0:
                    seen[w] = 1
                    pot[w] = c[e_i[e], e_j[e]] - pot[v]
                    stack[top] = w
                    top += 1
                    reached += 1
        if reached != n:
            return flows, pivots, _BROKEN_BASIS

        # Entering cell: most negative reduced cost (Dantzig), first-found
        # tie-break; after a pivot budget fall back to Bland's first-negative
        # rule to rule out cycling.
        bland = pivots > bland_after
        best = -opt_tol
        bi = -1
        bj = -1
        done = False
        for a in range(m):
            if done:
                break
            ua = pot[a]
            for b in range(k):
                if basic[a, b] == 0:
                    r = c[a, b] - ua - pot[m + b]
                    if r < best:
                        best = r
                        bi = a
                        bj = b
                        if bland:
                            done = True
                            break
        if bi < 0:
            break  # optimal
        if pivots >= max_pivots:
            return flows, pivots, _PIVOT_LIMIT

        # Unique tree path from supply bi to demand node m+bj.
        for v in range(n):
            seen[v] = 0
        par_edge[bi] = -1
        par_node[bi] = -1
        top = 0
        stack[top] = bi
        top += 1
        seen[bi] = 1
        target = m + bj
        while top > 0:
            top -= 1
            v = stack[top]
            if v == target:
                break
            for p in range(deg[v]):
                e = inc[v, p]
                w = m + e_j[e] if v == e_i[e] else e_i[e]
                if seen[w] == 0:
                    seen[w] = 1
                    par_edge[w] = e
                    par_node[w] = v
                    stack[top] = w
                    top += 1
        if seen[target] == 0:
            return flows, pivots, _BROKEN_BASIS
        plen = 0
        v = target
        while v != bi:
            path[plen] = par_edge[v]
            plen += 1
            v = par_node[v]
        # path[] is ordered target->bi; reverse so index 0 touches bi.  The
        # entering cell gains theta, so even positions (0-based) lose it.
        for a in range(plen // 2):
            tmp = path[a]
            path[a] = path[plen - 1 - a]
            path[plen - 1 - a] = tmp

        theta = np.inf
        leave = -1
        li = -1
        lj = -1
        for idx in range(0, plen, 2):
            e = path[idx]
            f = flows[e_i[e], e_j[e]]
            if f < theta or (f == theta and (e_i[e] < li or (e_i[e] == li and e_j[e] < lj))):
                theta = f
                leave = e
                li = e_i[e]
                lj = e_j[e]
        flows[bi, bj] = theta
        basic[bi, bj] = 1
        for idx in range(plen):
            e = path[idx]
            if idx % 2 == 0:
                flows[e_i[e], e_j[e]] -= theta
            else:
                flows[e_i[e], e_j[e]] += theta
        basic[li, lj] = 0
        flows[li, lj] = 0.0

        # Splice the entering cell into the leaving cell's edge slot and fix
        # the incident-edge lists of the four touched nodes.
        for node in (li, m + lj):
            dn = deg[node]
            for p in range(dn):
                if inc[node, p] == leave:
                    inc[node, p] = inc[node, dn - 1]
                    deg[node] = dn - 1
                    break
        e_i[leave] = bi
        e_j[leave] = bj
        inc[bi, deg[bi]] = leave
        deg[bi] += 1
        inc[m + bj, deg[m + bj]] = leave
        deg[m + bj] += 1
        pivots += 1

    # Optimal basis found.  Recompute flows from the unperturbed marginals by
    # peeling leaves of the basis tree, which removes the epsilon residue.
    rem = np.empty(n)
    for v in range(m):
        rem[v] = s[v]
    for v in range(k):
        rem[m + v] = d[v]
    alive = np.ones(nb, np.uint8)
    degree = deg.copy()
    out = np.zeros((m, k))
    top = 0
    for v in range(n):
        if degree[v] == 1:
            stack[top] = v
            top += 1
    processed = 0
    while top > 0:
        top -= 1
        v = stack[top]
        if degree[v] != 1:
            continue
        e = -1
        for p in range(deg[v]):
            if alive[inc[v, p]] == 1:
                e = inc[v, p]
                break
        if e < 0:
            continue
        w = m + e_j[e] if v == e_i[e] else e_i[e]
        f = rem[v]
        out[e_i[e], e_j[e]] = f
        rem[v] = 0.0
        rem[w] -= f
        alive[e] = 0
        degree[v] -= 1
        degree[w] -= 1
        processed += 1
        if degree[w] == 1:
            stack[top] = w
            top += 1
    if processed != nb:
        return out, pivots, _BROKEN_BASIS
    return out, pivots, _OK
