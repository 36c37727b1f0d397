"""Max-flow pipeline: congestion approximation, the regression reduction,
rounding, augmenting paths, and the directed-to-undirected reduction.

The approximate path routes demands by a recursion of box-constrained
regression solves against a congestion approximator (a maximum-capacity
spanning tree here: quality factor m, exact on trees), each solved by a
certificate-driven bisection over the congestion radius.  Exact unit-capacity
flows follow by scaling to feasibility, rounding the fractional flow with
cycle cancellation, and finishing with augmenting paths.  A Dinic blocking-flow
solver serves as the in-package oracle.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .cdsolver import solve_box_linf
from .core import RegressionInstance, SparseMatrix
from .errors import InfeasibleError, InputError, SolverFault
from .graphs import FlowNetwork, FlowSolution, incidence_apply
from .mirrorprox import solve_flow_regress


class TreeApproximator:
    """Congestion approximator from a maximum-capacity spanning tree.

    One row per tree edge: the indicator of the subtree cut scaled by the
    inverse capacity crossing it.  Exact on trees; quality factor m in general
    (every edge crossing a tree edge's cut has no larger capacity, by the
    cycle property of the maximum spanning tree).
    """

    def __init__(self, net):
        self.net = net
        n, m = net.n, net.m
        self.alpha = float(max(m, 1))
        order = sorted(range(m), key=lambda e: (-net.caps[e], e))
        parent = list(range(n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        tree_edges = []
        for e in order:
            ra, rb = find(net.tails[e]), find(net.heads[e])
            if ra != rb:
                parent[ra] = rb
                tree_edges.append(e)
        if len(tree_edges) != n - 1:
            raise InputError("graph must be connected")
        self.tree_edges = tree_edges
        adj = [[] for _ in range(n)]
        for e in tree_edges:
            adj[net.tails[e]].append((net.heads[e], e))
            adj[net.heads[e]].append((net.tails[e], e))
        self.tree_parent = np.full(n, -1, dtype=np.int64)
        self.tree_parent_edge = np.full(n, -1, dtype=np.int64)
        self.depth = np.zeros(n, dtype=np.int64)
        order_v = []
        stack = [0]
        seen = [False] * n
        seen[0] = True
        while stack:
            u = stack.pop()
            order_v.append(u)
            for w, e in adj[u]:
                if not seen[w]:
                    seen[w] = True
                    self.tree_parent[w] = u
                    self.tree_parent_edge[w] = e
                    self.depth[w] = self.depth[u] + 1
                    stack.append(w)
        self.post_order = order_v[::-1]
        # cut capacity per tree edge: total capacity of graph edges whose tree
        # path crosses it; accumulate by walking each edge's tree path
        cutcap = {e: 0.0 for e in tree_edges}
        for e in range(m):
            a, b = int(net.tails[e]), int(net.heads[e])
            for te in self._path_edges(a, b):
                cutcap[te] += net.caps[e]
        self.cutcap = cutcap
        # exact quality factor: tree routing congests edge e by
        # |Rd_e| * cutcap_e / u_e, so the max of that ratio bounds OPT from
        # above; it is at most m but usually far smaller
        self.alpha = max(
            (cutcap[e] / net.caps[e] for e in tree_edges), default=1.0
        )
        self.alpha = float(max(self.alpha, 1.0))
        # rows are indexed by position in tree_edges; S_e is the subtree below
        # the deeper endpoint of e
        self.row_vertex = []
        for e in tree_edges:
            a, b = int(net.tails[e]), int(net.heads[e])
            self.row_vertex.append(a if self.depth[a] > self.depth[b] else b)
        self.n_rows = len(tree_edges)

    def _path_edges(self, a, b):
        out = []
        da, db = int(self.depth[a]), int(self.depth[b])
        while da > db:
            out.append(int(self.tree_parent_edge[a]))
            a = int(self.tree_parent[a])
            da -= 1
        while db > da:
            out.append(int(self.tree_parent_edge[b]))
            b = int(self.tree_parent[b])
            db -= 1
        while a != b:
            out.append(int(self.tree_parent_edge[a]))
            out.append(int(self.tree_parent_edge[b]))
            a = int(self.tree_parent[a])
            b = int(self.tree_parent[b])
        return out

    def subtree_sums(self, d):
        """Net demand inside the subtree below each vertex, in O(n)."""
        s = np.asarray(d, dtype=np.float64).copy()
        for u in self.post_order:
            p = self.tree_parent[u]
            if p >= 0:
                s[p] += s[u]
        return s

    def apply(self, d):
        """R @ d: per tree edge, the subtree demand over the cut capacity."""
        s = self.subtree_sums(d)
        out = np.empty(self.n_rows)
        for k, e in enumerate(self.tree_edges):
            out[k] = s[self.row_vertex[k]] / self.cutcap[e]
        return out

    def tree_route(self, d):
        """Exact routing of d on the spanning tree; O(n)."""
        s = self.subtree_sums(d)
        f = np.zeros(self.net.m)
        for k, e in enumerate(self.tree_edges):
            v = self.row_vertex[k]
            need = s[v]  # net flow that must enter the subtree below v
            if int(self.net.heads[e]) == v:
                f[e] = need
            else:
                f[e] = -need
        return f

    def _in_subtree(self, vertex, root_v):
        v = vertex
        dv, dr = int(self.depth[v]), int(self.depth[root_v])
        while dv > dr:
            v = int(self.tree_parent[v])
            dv -= 1
        return v == root_v

    def regression_parts(self, d):
        """(A, b) with A = 2 alpha R B U and b = 2 alpha R d, as triplets."""
        net = self.net
        scale = 2.0 * self.alpha
        row_of = {e: k for k, e in enumerate(self.tree_edges)}
        triplets = []
        # column f touches exactly the tree edges on f's endpoints' tree path
        for f in range(net.m):
            a, b = int(net.tails[f]), int(net.heads[f])
            for te in self._path_edges(a, b):
                k = row_of[te]
                v = self.row_vertex[k]
                # chi_S(head) - chi_S(tail) for S = subtree below v
                sign = (1.0 if self._in_subtree(b, v) else 0.0) - (
                    1.0 if self._in_subtree(a, v) else 0.0)
                if sign != 0.0:
                    triplets.append(
                        (k, f, scale * sign * net.caps[f] / self.cutcap[te])
                    )
        matrix = SparseMatrix.from_triplets(triplets, self.n_rows, net.m)
        rhs = scale * self.apply(d)
        return matrix, rhs


def build_tree_approximator(net):
    """Spanning-tree congestion approximator with quality factor m."""
    return TreeApproximator(net)


@dataclass
class RouteResult:
    flow: np.ndarray
    x: np.ndarray
    radius: float
    composite: float
    residual_ratio: float
    certified: bool
    probes: int
    meta: dict = field(default_factory=dict)


def almost_route(net, d, approx, eps, solver="cd-l2", seed=0):
    """Route d to composite factor (1 + eps): certificate-driven radius search.

    Solves the box-constrained regression against the approximator rows at a
    bisected congestion radius; a probe is accepted when the solver exhibits a
    point of value at most eps*r/2 and rejected when the weak-duality bound
    certifies the value stays above it.  Raises InfeasibleError when no radius
    up to the approximator quality bound is routable.
    """
    if not 0.0 < eps < 1.0:
        raise InputError("eps must lie in (0, 1)")
    d = np.asarray(d, dtype=np.float64)
    rd = approx.apply(d)
    rd_norm = float(np.abs(rd).max()) if len(rd) else 0.0
    if rd_norm == 0.0:
        return RouteResult(flow=np.zeros(net.m), x=np.zeros(net.m), radius=0.0,
                           composite=0.0, residual_ratio=0.0, certified=True,
                           probes=0)
    d_scaled = d / rd_norm
    matrix, rhs = approx.regression_parts(d_scaled)

    def probe(r, stream, warm=None):
        m_r = matrix.scaled(r)
        thresh = eps * r / 2.0
        inst = RegressionInstance(matrix=m_r, b=rhs, epsilon=max(thresh / 2.0, 1e-12))
        if solver == "mirror-prox":
            res = solve_flow_regress(inst, seed=seed, value_target=thresh)
            val = res.value
        else:
            mode = "diag" if solver == "cd-diag" else "l2"
            res = solve_box_linf(inst, mode=mode, seed=seed, stream=stream,
                                 value_target=thresh, x0=warm, lb_target=thresh)
            val = res.value
        return val <= thresh + 1e-12, res.x, val

    # the spanning tree routes the demands exactly, so its congestion is a
    # certified acceptable radius with a zero-residual point: the search only
    # pays for probes below it
    f_tree = approx.tree_route(d_scaled)
    x_tree = f_tree / net.caps
    cong_tree = max(float(np.abs(x_tree).max()), 1.0)
    lo, hi = 1.0, cong_tree
    best_r, best_x = hi, x_tree / cong_tree
    probes = 0
    largest_reject = None
    if hi > 1.0:
        ok_lo, x_lo, _ = probe(lo, 1, warm=best_x * (best_r / lo))
        probes += 1
        if ok_lo:
            best_r, best_x = lo, x_lo
        else:
            largest_reject = lo
            while hi / lo > 1.0 + eps / 4.0 and probes < 60:
                mid = math.sqrt(lo * hi)
                ok, x_mid, _ = probe(mid, probes, warm=best_x * (best_r / mid))
                probes += 1
                if ok:
                    hi, best_r, best_x = mid, mid, x_mid
                else:
                    lo = mid
                    largest_reject = mid
    x = best_x * best_r * rd_norm
    flow = x * net.caps
    resid = d - incidence_apply(net, flow)
    composite = 2.0 * approx.alpha * float(np.abs(approx.apply(resid)).max()) \
        + float(np.abs(x / rd_norm / best_r).max()) * best_r * rd_norm
    ratio = float(np.abs(approx.apply(resid)).max()) / rd_norm
    # opt_lower: rejected radii certify OPT above them; the approximator row
    # bound certifies OPT >= |R d| always
    opt_lower = rd_norm if largest_reject is None else largest_reject * rd_norm
    return RouteResult(flow=flow, x=x, radius=best_r * rd_norm,
                       composite=composite, residual_ratio=ratio,
                       certified=True, probes=probes,
                       meta={"opt_lower": opt_lower})


def flow_to_regress(net, d, eps, solver="cd-l2", seed=0):
    """Exact-demand routing with congestion within (1 + eps) of optimal.

    Round zero routes at accuracy eps; when the exact tree routing of the
    remaining residual already lands within (1 + eps) of the certified optimum
    lower bound the recursion finishes there, otherwise up to log(2m) further
    rounds route residual demands at accuracy 1/2 before the exact tree
    finish.  Residual contraction is asserted per round.
    """
    d = np.asarray(d, dtype=np.float64)
    approx = build_tree_approximator(net)
    rounds = max(1, math.ceil(math.log2(2 * max(net.m, 2))))
    f_total = np.zeros(net.m)
    d_k = d.copy()
    ratios = []
    opt_lower = 0.0
    for k in range(rounds + 1):
        eps_k = eps if k == 0 else 0.5
        rd_before = float(np.abs(approx.apply(d_k)).max())
        if rd_before <= 1e-14 * max(1.0, float(np.abs(d).max())):
            break
        route = almost_route(net, d_k, approx, eps_k, solver=solver,
                             seed=seed + k)
        f_total += route.flow
        d_k = d_k - incidence_apply(net, route.flow)
        rd_after = float(np.abs(approx.apply(d_k)).max())
        ratios.append((rd_before, rd_after, eps_k))
        if rd_after > eps_k * rd_before * (1.0 + 1e-6) + 1e-12:
            raise SolverFault(
                f"round {k}: residual contraction violated "
                f"({rd_after:.3e} vs {eps_k:.2f} * {rd_before:.3e})"
            )
        if k == 0:
            opt_lower = max(route.meta.get("opt_lower", 0.0), rd_before)
            # certified early finish: routing the residual exactly on the tree
            # may already land within (1 + eps) of the certified lower bound,
            # because the tree's quality factor matches the factor the
            # remaining rounds would grind down
            candidate = f_total + approx.tree_route(d_k)
            total_cong = float(np.abs(candidate / net.caps).max())
            if total_cong <= (1.0 + eps) * opt_lower + 1e-12:
                f_total = candidate
                d_k = d - incidence_apply(net, f_total)
                break
    f_total += approx.tree_route(d_k)
    achieved = incidence_apply(net, f_total)
    if np.abs(achieved - d).max() > 1e-9 * max(1.0, float(np.abs(d).max())):
        raise SolverFault("exact tree routing failed to close the demands")
    sol = FlowSolution.from_flow(net, f_total)
    sol.meta["contraction"] = ratios
    if net.sink is not None:
        sol.value = float(achieved[net.sink])
    return sol


def round_to_integral(net, f, value=None, tol=1e-6):
    """Integral flow of value at least floor(F) from a feasible fractional one.

    Unit capacities; works for undirected (signed flows in [-1, 1]) and
    directed (flows in [0, 1]) networks.  Cycle cancellation through a virtual
    return edge: each push rounds at least one edge to an integer and never
    decreases the value.
    """
    f = np.asarray(f, dtype=np.float64).copy()
    if net.source is None or net.sink is None:
        raise InputError("rounding needs designated source and sink")
    if not np.allclose(net.caps, 1.0):
        raise InputError("rounding requires unit capacities")
    lo = 0.0 if net.directed else -1.0
    if (f > 1.0 + tol).any() or (f < lo - tol).any():
        raise InputError("input flow violates capacities")
    f = np.clip(f, lo, 1.0)
    achieved = incidence_apply(net, f)
    inner = np.delete(achieved, [net.source, net.sink])
    if len(inner) and np.abs(inner).max() > tol:
        raise InputError("input flow violates conservation")
    fval = float(achieved[net.sink]) if value is None else float(value)

    m = net.m
    # adjacency over edges incl. the virtual return edge index m (t -> s)
    def frac(v):
        return abs(v - round(v)) > 1e-9

    ret = fval
    for _ in range(m + 2):
        frac_edges = [e for e in range(m) if frac(f[e])]
        if not frac_edges and not frac(ret):
            break
        adj = [[] for _ in range(net.n)]
        for e in frac_edges:
            u, v = int(net.tails[e]), int(net.heads[e])
            adj[u].append((v, e, 1.0))   # traverse along orientation
            adj[v].append((u, e, -1.0))  # traverse against orientation
        if frac(ret):
            adj[net.sink].append((net.source, m, 1.0))
            adj[net.source].append((net.sink, m, -1.0))
        cycle = _find_cycle(net.n, adj)
        if cycle is None:
            raise SolverFault("fractional support without a cycle")
        # orient the push to increase the return edge if it participates
        direction = 1.0
        for _, e, sgn in cycle:
            if e == m and sgn < 0:
                direction = -1.0
                break
        delta = math.inf
        for _, e, sgn in cycle:
            val = ret if e == m else f[e]
            step = sgn * direction
            room = (math.ceil(val - 1e-12) - val) if step > 0 else (val - math.floor(val + 1e-12))
            if e != m:
                room = min(room, (1.0 - val) if step > 0 else (val - lo))
            delta = min(delta, room)
        if delta <= 1e-12:
            raise SolverFault("degenerate rounding cycle")
        for _, e, sgn in cycle:
            if e == m:
                ret += sgn * direction * delta
            else:
                f[e] += sgn * direction * delta
    f = np.round(f)
    achieved = incidence_apply(net, f)
    out = FlowSolution.from_flow(net, f)
    out.value = float(achieved[net.sink])
    if out.value < math.floor(fval - 1e-6):
        raise SolverFault("rounding lost flow value")
    return out


def _find_cycle(n, adj):
    """Any cycle in the multigraph given by adjacency (neighbor, edge, sign)."""
    color = [0] * n
    for start in range(n):
        if color[start] or not adj[start]:
            continue
        stack = [(start, -1, iter(adj[start]))]
        color[start] = 1
        path = [(start, None)]
        on_path = {start: 0}
        while stack:
            u, in_edge, it = stack[-1]
            advanced = False
            for (w, e, sgn) in it:
                if e == in_edge:
                    continue
                if w in on_path:
                    # found a cycle: slice the path from w onward
                    k = on_path[w]
                    cyc = [(path[i][0], path[i][1][0], path[i][1][1])
                           for i in range(k + 1, len(path))]
                    cyc.append((w, e, sgn))
                    return cyc
                if color[w] == 0:
                    color[w] = 1
                    path.append((w, (e, sgn)))
                    on_path[w] = len(path) - 1
                    stack.append((w, e, iter(adj[w])))
                    advanced = True
                    break
            if not advanced:
                color[u] = 2
                stack.pop()
                dropped = path.pop()
                del on_path[dropped[0]]
        # reset path bookkeeping between components
        path.clear()
        on_path.clear()
    return None


def augment_to_max(net, flow, rounds=None):
    """BFS augmenting rounds on the unit residual graph; stops at maximality."""
    if net.source is None or net.sink is None:
        raise InputError("augmenting needs designated source and sink")
    f = np.asarray(flow, dtype=np.float64).copy()
    lo = 0.0 if net.directed else -1.0
    rounds = net.m + 1 if rounds is None else rounds
    adj = [[] for _ in range(net.n)]
    for e in range(net.m):
        u, v = int(net.tails[e]), int(net.heads[e])
        adj[u].append((v, e, 1.0))
        adj[v].append((u, e, -1.0))
    done = 0
    while done < rounds:
        parent = {net.source: None}
        q = deque([net.source])
        while q and net.sink not in parent:
            u = q.popleft()
            for (w, e, sgn) in adj[u]:
                if w in parent:
                    continue
                residual = (1.0 - f[e]) if sgn > 0 else (f[e] - lo)
                if residual > 1e-9:
                    parent[w] = (u, e, sgn, residual)
                    q.append(w)
        if net.sink not in parent:
            break
        # walk back, find bottleneck, push
        bottleneck = math.inf
        w = net.sink
        while parent[w] is not None:
            u, e, sgn, residual = parent[w]
            bottleneck = min(bottleneck, residual)
            w = u
        w = net.sink
        while parent[w] is not None:
            u, e, sgn, _ = parent[w]
            f[e] += sgn * bottleneck
            w = u
        done += 1
    out = FlowSolution.from_flow(net, f)
    out.value = float(out.achieved_demand[net.sink])
    return out


def dinic_oracle(net):
    """Exact max flow via blocking flows; returns a FlowSolution.

    Undirected edges are modeled as arc pairs sharing no capacity, which
    preserves the max-flow value; the reported per-edge flow is the net.
    """
    if net.source is None or net.sink is None:
        raise InputError("max flow needs designated source and sink")
    n = net.n
    heads, caps, orig = [], [], []
    graph = [[] for _ in range(n)]

    def add_arc(u, v, c, tag):
        graph[u].append(len(heads))
        heads.append(v)
        caps.append(c)
        orig.append(tag)
        graph[v].append(len(heads))
        heads.append(u)
        caps.append(0.0)
        orig.append(None)

    for e in range(net.m):
        u, v, c = int(net.tails[e]), int(net.heads[e]), float(net.caps[e])
        add_arc(u, v, c, (e, 1.0))
        if not net.directed:
            add_arc(v, u, c, (e, -1.0))
    flow_arc = [0.0] * len(heads)
    s, t = net.source, net.sink
    total = 0.0
    while True:
        level = [-1] * n
        level[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for a in graph[u]:
                if caps[a] - flow_arc[a] > 1e-9 and level[heads[a]] < 0:
                    level[heads[a]] = level[u] + 1
                    q.append(heads[a])
        if level[t] < 0:
            break
        it = [0] * n

        def dfs(u, pushed):
            if u == t:
                return pushed
            while it[u] < len(graph[u]):
                a = graph[u][it[u]]
                v = heads[a]
                if caps[a] - flow_arc[a] > 1e-9 and level[v] == level[u] + 1:
                    got = dfs(v, min(pushed, caps[a] - flow_arc[a]))
                    if got > 0:
                        flow_arc[a] += got
                        flow_arc[a ^ 1] -= got
                        return got
                it[u] += 1
            return 0.0

        while True:
            pushed = dfs(s, math.inf)
            if pushed <= 0:
                break
            total += pushed
    f = np.zeros(net.m)
    for a in range(0, len(heads), 2):
        if orig[a] is not None:
            e, sgn = orig[a]
            f[e] += sgn * flow_arc[a]
    out = FlowSolution.from_flow(net, f)
    out.value = total
    return out


def directed_reduce(net):
    """Unit digraph -> undirected triple construction with a half-saturating start.

    Every arc (u, v) becomes undirected edges (s, v), (v, u), (u, t) of
    capacity one half; the initial flow pushes one half along each.  Returns
    (undirected network, f_init, recover) where recover maps an undirected
    max flow back to an integral max flow of the digraph.
    """
    if not net.directed:
        raise InputError("directed reduction expects a digraph")
    if not np.allclose(net.caps, 1.0):
        raise InputError("directed reduction expects unit capacities")
    if net.source is None or net.sink is None:
        raise InputError("directed reduction needs source and sink")
    s, t = net.source, net.sink
    # arcs into the source or out of the sink never carry flow in some maximum
    # flow (drop cycles in a decomposition); dropping them avoids degenerate
    # self-loop legs in the construction
    kept = [k for k in range(net.m)
            if int(net.heads[k]) != s and int(net.tails[k]) != t]
    edges = []
    init_along = []  # +1 when f_init follows the stored orientation
    middle_of_arc = []
    for k in kept:
        u, v = int(net.tails[k]), int(net.heads[k])
        for (a, b) in ((s, v), (v, u), (u, t)):
            lo, hi = (a, b) if a < b else (b, a)
            edges.append((lo, hi, 0.5))
            init_along.append(1.0 if (lo, hi) == (a, b) else -1.0)
    middle_of_arc = [3 * idx + 1 for idx in range(len(kept))]
    und = FlowNetwork(net.n, edges, directed=False, source=s, sink=t)
    f_init = 0.5 * np.array(init_along)

    def recover(f_final):
        diff = np.asarray(f_final, dtype=np.float64) - f_init
        # decompose diff into s->t paths, dropping cycles
        resid = diff.copy()
        f_rec = np.zeros(net.m)
        arc_of_middle = {}
        dir_sign = {}
        for idx, k in enumerate(kept):
            e = middle_of_arc[idx]
            arc_of_middle[e] = k
            # the init flow runs v -> u on the middle edge; recovered usage of
            # the arc (u, v) cancels it, i.e. traverses the middle edge u -> v
            u, v = int(net.tails[k]), int(net.heads[k])
            lo, hi = (v, u) if v < u else (u, v)
            dir_sign[e] = 1.0 if (lo, hi) == (u, v) else -1.0
        value = 0.0
        for _ in range(10 * net.m + 10):
            # walk a path s -> t through positive residual diff
            adj = [[] for _ in range(net.n)]
            for e in range(und.m):
                if abs(resid[e]) > 1e-9:
                    u, v = int(und.tails[e]), int(und.heads[e])
                    if resid[e] > 0:
                        adj[u].append((v, e, 1.0))
                    else:
                        adj[v].append((u, e, -1.0))
            parent = {s: None}
            q = deque([s])
            while q and t not in parent:
                u = q.popleft()
                for (w, e, sgn) in adj[u]:
                    if w not in parent:
                        parent[w] = (u, e, sgn)
                        q.append(w)
            if t not in parent:
                break
            bottleneck = math.inf
            w = t
            path = []
            while parent[w] is not None:
                u, e, sgn = parent[w]
                bottleneck = min(bottleneck, abs(resid[e]))
                path.append((e, sgn))
                w = u
            for e, sgn in path:
                resid[e] -= sgn * bottleneck
                if e in arc_of_middle and sgn == dir_sign[e]:
                    f_rec[arc_of_middle[e]] += bottleneck
            value += bottleneck
        f_rec = np.clip(f_rec, 0.0, 1.0)
        if np.abs(f_rec - np.round(f_rec)).max() > 1e-6:
            rounded = round_to_integral(net, f_rec)
            f_rec = rounded.flow
        else:
            f_rec = np.round(f_rec)
        return f_rec

    return und, f_init, recover


def exact_unit_maxflow(net, eps=None, solver="cd-l2", seed=0):
    """Exact integral max flow on unit-capacity graphs via the full pipeline.

    Approximate route, scale to feasibility, round, then augmenting paths.
    Directed inputs go through the undirected reduction first.
    """
    if not np.allclose(net.caps, 1.0):
        raise InputError("exact pipeline expects unit capacities")
    if net.source is None or net.sink is None:
        raise InputError("max flow needs designated source and sink")
    if net.directed:
        und, f_init, recover = directed_reduce(net)
        # scale to a unit multigraph for the recursive undirected solve
        scaled = FlowNetwork(
            und.n, [(int(u), int(v), 1.0) for u, v in zip(und.tails, und.heads)],
            directed=False, source=und.source, sink=und.sink,
        )
        inner = exact_unit_maxflow(scaled, eps=eps, solver=solver, seed=seed)
        f_final = inner.flow * 0.5
        f_rec = recover(f_final)
        aug = augment_to_max(net, f_rec)
        aug.meta["f_init"] = f_init
        aug.meta["f_final"] = f_final
        aug.meta["und"] = und
        return aug
    if eps is None:
        eps = min(0.25, max(0.02, net.n ** 0.25 / max(net.m, 1) ** 0.75))
    d = net.st_demand(1.0)
    sol = flow_to_regress(net, d, eps, solver=solver, seed=seed)
    congestion = sol.max_congestion
    if congestion <= 0:
        raise SolverFault("approximate route returned a zero flow")
    feasible = sol.flow / congestion
    rounded = round_to_integral(net, feasible)
    return augment_to_max(net, rounded.flow)
