"""Dynamic weighted sampling: sum trees, alias tables, and the two-summand mixture.

Coordinate selection needs to track weights of the form
``static_j + coeff * sum_i p_i(x) * w_ij`` as x changes one coordinate at a
time.  The static summand lives in a precomputed alias table; the dynamic
summand is sampled by descending a sum tree over rows (leaf weight
``expw_i * row_mass_i``) and then drawing from a per-row alias table over the
``w_ij``.  All randomness flows through counter-based Philox generators keyed
by (seed, stream), so every run is replayable.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InputError, SolverFault


def make_rng(seed, stream=0):
    """Counter-based generator; distinct streams are statistically independent."""
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(stream)])
    return np.random.Generator(np.random.Philox(key=key))


class BufferedUniforms:
    """Block-buffered uniform draws; same stream order as raw generator calls."""

    __slots__ = ("rng", "block", "_buf", "_pos")

    def __init__(self, rng, block=4096):
        self.rng = rng
        self.block = block
        self._buf = rng.random(block)
        self._pos = 0

    def next(self):
        if self._pos == self.block:
            self._buf = self.rng.random(self.block)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u


class DynamicTree:
    """Complete implicit binary tree over n leaves storing subtree sums.

    Updates touch one root-to-leaf path; sampling descends top-down with one
    uniform draw per level.  Weights must be nonnegative.
    """

    __slots__ = ("n", "size", "nodes", "touched_nodes", "update_count")

    def __init__(self, weights):
        weights = list(map(float, weights))
        self.n = len(weights)
        size = 1
        while size < max(self.n, 1):
            size *= 2
        self.size = size
        nodes = [0.0] * (2 * size)
        for i, w in enumerate(weights):
            if w < 0:
                raise InputError(f"leaf {i}: negative weight")
            nodes[size + i] = w
        for k in range(size - 1, 0, -1):
            nodes[k] = nodes[2 * k] + nodes[2 * k + 1]
        self.nodes = nodes
        self.touched_nodes = 0
        self.update_count = 0

    @property
    def total(self):
        return self.nodes[1]

    def get(self, i):
        return self.nodes[self.size + i]

    def update(self, i, weight):
        """Set leaf i; refreshes the ancestor sums along one path."""
        if weight < 0:
            raise InputError(f"leaf {i}: negative weight")
        k = self.size + i
        nodes = self.nodes
        nodes[k] = weight
        self.touched_nodes += 1
        k >>= 1
        while k >= 1:
            nodes[k] = nodes[2 * k] + nodes[2 * k + 1]
            self.touched_nodes += 1
            k >>= 1
        self.update_count += 1

    def sample(self, uniforms):
        """Draw a leaf index proportionally to its weight.

        ``uniforms`` is a BufferedUniforms (or anything with .next()).
        """
        nodes = self.nodes
        total = nodes[1]
        if total <= 0.0:
            raise SolverFault("sampling from an empty tree")
        k = 1
        while k < self.size:
            left = nodes[2 * k]
            u = uniforms.next() * nodes[k]
            k = 2 * k if u < left else 2 * k + 1
        return k - self.size

    def rebuild(self, weights):
        nodes = self.nodes
        size = self.size
        for i in range(size):
            nodes[size + i] = float(weights[i]) if i < self.n else 0.0
        for k in range(size - 1, 0, -1):
            nodes[k] = nodes[2 * k] + nodes[2 * k + 1]


class StaticAlias:
    """Walker alias table over a fixed nonnegative weight vector; O(1) draws."""

    __slots__ = ("n", "prob", "alias", "total")

    def __init__(self, weights):
        weights = np.asarray(weights, dtype=np.float64)
        if len(weights) == 0:
            raise InputError("alias table needs at least one weight")
        if (weights < 0).any():
            raise InputError("alias weights must be nonnegative")
        total = float(weights.sum())
        if total <= 0:
            raise InputError("alias table needs positive total weight")
        self.n = len(weights)
        self.total = total
        scaled = weights * (self.n / total)
        prob = np.ones(self.n)
        alias = np.arange(self.n)
        small = [i for i in range(self.n) if scaled[i] < 1.0]
        large = [i for i in range(self.n) if scaled[i] >= 1.0]
        scaled = scaled.tolist()
        while small and large:
            s = small.pop()
            g = large.pop()
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] = scaled[g] - (1.0 - scaled[s])
            (small if scaled[g] < 1.0 else large).append(g)
        self.prob = prob.tolist()
        self.alias = alias.tolist()

    def sample(self, uniforms):
        r = uniforms.next() * self.n
        i = int(r)
        if i == self.n:
            i -= 1
        return i if (r - i) < self.prob[i] else self.alias[i]


def tree_update(tree, i, weight):
    """Module-level alias for DynamicTree.update."""
    tree.update(i, weight)


def tree_sample(tree, uniforms):
    """Module-level alias for DynamicTree.sample."""
    return tree.sample(uniforms)


class CoordSampler:
    """Samples coordinates proportionally to their current smoothness weights.

    The weight of column j decomposes as ``static_j + (8/alpha) * sum_i p_i w_ij``
    with everything except p precomputed: the static summand uses an alias
    table; the dynamic summand routes through a row tree (leaf
    ``expw_i * row_mass_i``) and a per-row alias over the ``w_ij``.  The sampler
    stays in sync with its SoftmaxState by being the single mutation path
    (``step``); sampling with a stale state raises.
    """

    def __init__(self, state, params):
        self.state = state
        self.params = params
        matrix = state.matrix
        n, m = matrix.n_rows, matrix.n_cols
        self.static_alias = StaticAlias(params.sample_static)
        self.static_mass = float(params.sample_static.sum())
        self.dyn_coeff = 8.0 / state.alpha
        self.row_alias = []
        self.row_mass = np.zeros(n)
        for i in range(n):
            cols, vals = matrix.row(i)
            if len(cols) == 0:
                self.row_alias.append(None)
                continue
            w = np.empty(len(cols))
            for k, (j, v) in enumerate(zip(cols, vals)):
                cm = matrix.col_maxabs[j]
                if params.mode == "l2":
                    w[k] = abs(v) * cm
                else:
                    dj = params.d[j]
                    w[k] = abs(v) * cm / dj if dj > 0 else 0.0
            self.row_mass[i] = w.sum()
            self.row_alias.append(
                (cols, StaticAlias(w)) if self.row_mass[i] > 0 else None
            )
        self.tree = DynamicTree(np.array(state.expw) * self.row_mass)
        self._synced_version = state.version
        self._synced_rebuilds = state.rebuild_count

    def _leaf(self, i):
        return self.state.expw[i] * float(self.row_mass[i])

    def resync(self):
        """Full leaf refresh; needed after a state rebuild."""
        self.tree.rebuild(np.array(self.state.expw) * self.row_mass)
        self._synced_version = self.state.version
        self._synced_rebuilds = self.state.rebuild_count

    def step(self, j, delta):
        """Apply a coordinate update to the state and keep the tree in sync."""
        rows = self.state.apply_coord_update(j, delta)
        if self.state.rebuild_count != self._synced_rebuilds:
            self.resync()
            return
        for i in rows:
            self.tree.update(int(i), self._leaf(int(i)))
        self._synced_version = self.state.version

    def dynamic_mass(self):
        return self.dyn_coeff * self.tree.total / self.state.z

    def total_mass(self):
        """Current sum of sampling weights over all columns."""
        return self.static_mass + self.dynamic_mass()

    def sample(self, uniforms):
        """Draw a column index j proportionally to its current weight."""
        if self.state.version != self._synced_version:
            raise SolverFault("sampler out of sync with its softmax state")
        dyn = self.dyn_coeff * self.tree.total
        stat = self.static_mass * self.state.z
        if stat <= 0 and dyn <= 0:
            raise SolverFault("sampler has zero total mass")
        if uniforms.next() * (stat + dyn) < stat:
            return self.static_alias.sample(uniforms)
        i = self.tree.sample(uniforms)
        cols, alias = self.row_alias[i]
        return int(cols[alias.sample(uniforms)])

    def weight(self, j):
        """Current sampling weight of column j (matches the drawn law exactly)."""
        rows, vals = self.state.matrix.col(j)
        if len(rows) == 0:
            dyn = 0.0
        else:
            w = self.params.row_entry_weight(j, vals)
            expw = self.state.expw
            p = np.array([expw[int(i)] for i in rows]) / self.state.z
            dyn = self.dyn_coeff * float(w @ p)
        return dyn + float(self.params.sample_static[j])


def mixture_sample(sampler, uniforms):
    """One draw from the static/dynamic two-summand mixture."""
    return sampler.sample(uniforms)


def chi2_pvalue(observed, expected):
    """Pearson chi-square upper tail via the regularized incomplete gamma.

    Tiny expected-count bins are pooled to keep the statistic honest.
    """
    observed = np.asarray(observed, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    keep = expected >= 5.0
    if not keep.all():
        pooled_o = observed[~keep].sum()
        pooled_e = expected[~keep].sum()
        observed = np.append(observed[keep], pooled_o)
        expected = np.append(expected[keep], pooled_e)
    if len(observed) < 2:
        return 1.0
    stat = float(((observed - expected) ** 2 / expected).sum())
    dof = len(observed) - 1
    return float(_gamma_upper_regularized(dof / 2.0, stat / 2.0))


def _gamma_upper_regularized(a, x):
    if x <= 0:
        return 1.0
    if x < a + 1.0:
        # series for the lower incomplete gamma
        term = 1.0 / a
        total = term
        k = a
        for _ in range(500):
            k += 1.0
            term *= x / k
            total += term
            if term < total * 1e-15:
                break
        lower = total * math.exp(-x + a * math.log(x) - math.lgamma(a))
        return max(0.0, 1.0 - lower)
    # continued fraction for the upper incomplete gamma
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))
