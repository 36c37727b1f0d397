"""Shared test oracles: LP solvers, finite differences, and instance generators.

Everything here is deliberately independent of the solver code paths it
checks: dense linear programming via scipy, brute-force enumeration, and
classical textbook routines.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import linprog

from linfflow.core import RegressionInstance, SparseMatrix


def dense_to_sparse(a):
    a = np.asarray(a, dtype=np.float64)
    triplets = [
        (i, j, a[i, j])
        for i in range(a.shape[0])
        for j in range(a.shape[1])
        if a[i, j] != 0.0
    ]
    return SparseMatrix.from_triplets(triplets, a.shape[0], a.shape[1])


def random_sparse(rng, n, m, per_col=3, scale=1.0):
    """Random matrix with roughly per_col entries per column, none zero."""
    triplets = []
    for j in range(m):
        k = min(n, max(1, int(rng.integers(1, per_col + 1))))
        rows = rng.choice(n, size=k, replace=False)
        for i in rows:
            v = 0.0
            while v == 0.0:
                v = float(rng.normal()) * scale
            triplets.append((int(i), j, v))
    return SparseMatrix.from_triplets(triplets, n, m)


def random_instance(rng, n, m, per_col=3, eps=1e-2, scale=1.0, b_scale=1.0):
    matrix = random_sparse(rng, n, m, per_col=per_col, scale=scale)
    b = rng.normal(size=n) * b_scale
    return RegressionInstance(matrix=matrix, b=b, epsilon=eps)


def box_linf_opt(a_dense, b, radius=1.0):
    """Exact optimum of min_{|x|_inf <= radius} max_i |(A x - b)_i| via LP."""
    a = np.asarray(a_dense, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n, m = a.shape
    # variables: (x, t); minimize t subject to  A x - t <= b, -A x - t <= -b
    c = np.zeros(m + 1)
    c[-1] = 1.0
    a_ub = np.block([[a, -np.ones((n, 1))], [-a, -np.ones((n, 1))]])
    b_ub = np.concatenate([b, -b])
    bounds = [(-radius, radius)] * m + [(0, None)]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    assert res.success, res.message
    return float(res.fun), np.array(res.x[:m])


def min_congestion_opt(net, d=None):
    """Exact min congestion routing of demand d via LP (variables f, t)."""
    d = net.demand if d is None else np.asarray(d, dtype=np.float64)
    m, n = net.m, net.n
    b_mat = np.zeros((n, m))
    for e, (u, v) in enumerate(zip(net.tails, net.heads)):
        b_mat[u, e] -= 1.0
        b_mat[v, e] += 1.0
    c = np.zeros(m + 1)
    c[-1] = 1.0
    # |f_e| <= t * u_e  expressed as f_e - u_e t <= 0 and -f_e - u_e t <= 0
    a_ub = np.block([
        [np.eye(m), -net.caps.reshape(-1, 1)],
        [-np.eye(m), -net.caps.reshape(-1, 1)],
    ])
    b_ub = np.zeros(2 * m)
    a_eq = np.hstack([b_mat, np.zeros((n, 1))])
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=d,
                  bounds=[(None, None)] * m + [(0, None)], method="highs")
    assert res.success, res.message
    return float(res.fun), np.array(res.x[:m])


def central_diff_grad(f, x, h=1e-5):
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    for j in range(len(x)):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def golden_section(f, lo, hi, tol=1e-10):
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def grid_search_min(f, dims, lo=-1.0, hi=1.0, resolution=1e-3):
    """Brute-force minimizer over a uniform grid on [lo, hi]^dims."""
    steps = int(round((hi - lo) / resolution)) + 1
    axis = np.linspace(lo, hi, steps)
    best_v, best_x = math.inf, None
    if dims == 1:
        for x0 in axis:
            v = f(np.array([x0]))
            if v < best_v:
                best_v, best_x = v, np.array([x0])
        return best_v, best_x
    if dims == 2:
        for x0 in axis:
            for x1 in axis:
                v = f(np.array([x0, x1]))
                if v < best_v:
                    best_v, best_x = v, np.array([x0, x1])
        return best_v, best_x
    raise ValueError("grid oracle supports 1 or 2 dims")


def random_connected_graph(rng, n, extra_edges=None, unit=True):
    """Random connected undirected graph: spanning tree plus extras."""
    from linfflow.graphs import FlowNetwork

    edges = set()
    perm = rng.permutation(n)
    for k in range(1, n):
        u = int(perm[k])
        v = int(perm[rng.integers(0, k)])
        edges.add((min(u, v), max(u, v)))
    if extra_edges is None:
        extra_edges = max(1, n // 2)
    tries = 0
    while len(edges) < n - 1 + extra_edges and tries < 50 * n:
        tries += 1
        u, v = int(rng.integers(0, n)), int(rng.integers(0, n))
        if u == v:
            continue
        edges.add((min(u, v), max(u, v)))
    caps = [1.0 if unit else float(rng.integers(1, 5)) for _ in edges]
    edge_list = [(u, v, c) for (u, v), c in zip(sorted(edges), caps)]
    source, sink = 0, n - 1
    return FlowNetwork(n, edge_list, directed=False, source=source, sink=sink)


def random_unit_digraph(rng, n, extra_arcs=None):
    """Random unit-capacity digraph with at least one s->t path."""
    from linfflow.graphs import FlowNetwork

    s, t = 0, n - 1
    arcs = set()
    # guarantee an s -> t path through a random permutation of inner vertices
    inner = list(rng.permutation(np.arange(1, n - 1)))
    path = [s] + [int(v) for v in inner[: max(0, int(rng.integers(0, max(1, n - 2))))]] + [t]
    for u, v in zip(path[:-1], path[1:]):
        arcs.add((u, v))
    if extra_arcs is None:
        extra_arcs = 2 * n
    tries = 0
    while len(arcs) < len(path) - 1 + extra_arcs and tries < 100 * n:
        tries += 1
        u, v = int(rng.integers(0, n)), int(rng.integers(0, n))
        if u == v or (u, v) in arcs:
            continue
        arcs.add((u, v))
    # ensure weak connectivity by linking isolated vertices into the path
    touched = {u for a in arcs for u in a}
    for v in range(n):
        if v not in touched:
            arcs.add((s, v))
            arcs.add((v, t))
    edge_list = [(u, v, 1.0) for (u, v) in sorted(arcs)]
    return FlowNetwork(n, edge_list, directed=True, source=s, sink=t)


def regularized_saddle(matrix2, b2, eps, s, iters=100_000, eta=None):
    """High-accuracy saddle of the entropy-regularized bilinear objective.

    Deterministic full-gradient mirror prox (Euclidean on x, entropic on y);
    a test oracle only.
    """
    import math as _math

    a = matrix2.to_dense()
    n2, m = a.shape
    log_n = max(_math.log(n2), 1.0)
    if eta is None:
        eta = 1.0 / (4.0 * (np.abs(a).sum(axis=1).max() + eps + 1.0))
    x = np.zeros(m)
    y = np.full(n2, 1.0 / n2)

    def g(xv, yv):
        gx = a.T @ yv + (eps / (2 * s)) * xv
        gy = b2 - a @ xv + (eps / (4 * log_n)) * np.log(yv)
        return gx, gy

    for _ in range(iters):
        gx, gy = g(x, y)
        wx = np.clip(x - eta * s * gx, -1.0, 1.0)
        wy = y * np.exp(-eta * gy)
        wy /= wy.sum()
        gx, gy = g(wx, wy)
        x = np.clip(x - eta * s * gx, -1.0, 1.0)
        y = y * np.exp(-eta * gy)
        y /= y.sum()
    return x, y


def ford_fulkerson_value(net):
    """Second independent max-flow implementation (BFS augmenting paths)."""
    from collections import deque

    n = net.n
    cap = {}
    for e in range(net.m):
        u, v, c = int(net.tails[e]), int(net.heads[e]), float(net.caps[e])
        cap[(u, v)] = cap.get((u, v), 0.0) + c
        if not net.directed:
            cap[(v, u)] = cap.get((v, u), 0.0) + c
        else:
            cap.setdefault((v, u), 0.0)
    adj = {}
    for (u, v) in cap:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    flow = {k: 0.0 for k in cap}
    s, t = net.source, net.sink
    total = 0.0
    while True:
        parent = {s: None}
        q = deque([s])
        while q and t not in parent:
            u = q.popleft()
            for w in adj.get(u, ()):
                if w not in parent and cap.get((u, w), 0.0) - flow.get((u, w), 0.0) > 1e-9:
                    parent[w] = u
                    q.append(w)
        if t not in parent:
            return total
        bott = float("inf")
        w = t
        while parent[w] is not None:
            u = parent[w]
            bott = min(bott, cap[(u, w)] - flow[(u, w)])
            w = u
        w = t
        while parent[w] is not None:
            u = parent[w]
            flow[(u, w)] = flow.get((u, w), 0.0) + bott
            flow[(w, u)] = flow.get((w, u), 0.0) - bott
            w = u
        total += bott
