"""Isotonic regression on finite partial orders and sparse index-set search.

For a fixed nonnegative ``M`` and index set ``I`` the points ``M(I)^T X_i``
carry the componentwise order of ``R^k``. Least squares over values that are
monotone for that order and confined to ``[0, b]`` is solved exactly: an
unconstrained isotonic fit (pool-adjacent-violators on chains, recursive
minimum-cut partitioning on general DAGs) followed by clipping. Searching
over all ``s``-subsets ``I`` gives the sparse fit.
"""

import heapq
import sys
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from math import comb, inf

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import EnumerationBudgetError, InconsistentOrderError, NonnegativityError

TIE_TOL = 1e-12


# ---------------------------------------------------------------------------
# partial orders
# ---------------------------------------------------------------------------

class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the smaller index as root so labels are deterministic
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def _labels(uf, n):
    roots = [uf.find(i) for i in range(n)]
    first = {}
    out = np.empty(n, dtype=np.intp)
    for i, r in enumerate(roots):
        out[i] = first.setdefault(r, len(first))
    return out


@dataclass
class PartialOrder:
    """Strict order between groups of tied points.

    ``group_of[i]`` is the group of point ``i``; ``relation[g, h]`` says group
    ``g`` precedes group ``h``. Groups are numbered by first appearance.
    """

    n: int
    group_of: np.ndarray
    relation: np.ndarray
    _topo: object = field(default=None, repr=False)

    @property
    def n_groups(self):
        return self.relation.shape[0]

    @property
    def groups(self):
        return [np.flatnonzero(self.group_of == g) for g in range(self.n_groups)]

    @property
    def equivalences(self):
        return [g for g in self.groups if g.size > 1]

    @property
    def edges(self):
        """Point-level pairs ``(i, j)`` with ``i`` strictly before ``j``."""
        groups = self.groups
        out = set()
        for g, h in zip(*np.nonzero(self.relation)):
            for i in groups[g]:
                for j in groups[h]:
                    out.add((int(i), int(j)))
        return out

    @classmethod
    def from_edges(cls, n, edges=(), equivalences=()):
        """Order generated by explicit pairs; the relation is closed transitively."""
        uf = _UnionFind(n)
        for grp in equivalences:
            grp = list(grp)
            for a in grp[1:]:
                uf.union(grp[0], a)
        group_of = _labels(uf, n)
        G = int(group_of.max()) + 1 if n else 0
        rel = np.zeros((G, G), dtype=bool)
        for i, j in edges:
            rel[group_of[i], group_of[j]] = True
        # transitive closure by repeated squaring
        while True:
            step = rel | ((rel.astype(np.int64) @ rel.astype(np.int64)) > 0)
            if np.array_equal(step, rel):
                break
            rel = step
        return cls(n, group_of, rel)

    def check(self):
        """Raise if the strict relation contains a cycle."""
        if np.any(np.diag(self.relation)):
            raise InconsistentOrderError("a group precedes itself")
        ncomp, lab = connected_components(csr_matrix(self.relation), directed=True,
                                          connection="strong")
        if ncomp < self.n_groups:
            raise InconsistentOrderError("cycle among strict relations")

    def topological_order(self):
        """Kahn's algorithm, lowest group index first among ready groups."""
        if self._topo is None:
            self.check()
            rel = self.relation
            indeg = rel.sum(axis=0).astype(np.int64)
            ready = [g for g in range(self.n_groups) if indeg[g] == 0]
            heapq.heapify(ready)
            out = []
            while ready:
                g = heapq.heappop(ready)
                out.append(g)
                for h in np.flatnonzero(rel[g]):
                    indeg[h] -= 1
                    if indeg[h] == 0:
                        heapq.heappush(ready, int(h))
            self._topo = np.array(out, dtype=np.intp)
        return self._topo

    def is_chain(self):
        t = self.topological_order()
        return bool(np.all(self.relation[t[:-1], t[1:]]))


def masked(M, I):
    """``M(I)``: ``M`` with every row outside ``I`` set to zero."""
    M = np.asarray(M, dtype=float)
    out = np.zeros_like(M)
    idx = list(I)
    out[idx] = M[idx]
    return out


def projections(M, I, X):
    """Rows ``M(I)^T X_i`` as an ``n x k`` array."""
    idx = list(I)
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    return np.asarray(X, dtype=float)[:, idx] @ M[idx]


def order_from_points(P, tol=TIE_TOL):
    """Componentwise order on the rows of ``P`` with ties merged."""
    P = np.asarray(P, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    n = P.shape[0]
    le = np.all(P[:, None, :] <= P[None, :, :] + tol, axis=-1)
    tie = le & le.T
    uf = _UnionFind(n)
    for i, j in zip(*np.nonzero(np.triu(tie, 1))):
        uf.union(int(i), int(j))
    group_of = _labels(uf, n)
    G = int(group_of.max()) + 1 if n else 0
    reps = np.array([np.flatnonzero(group_of == g)[0] for g in range(G)], dtype=np.intp)
    rel = le[np.ix_(reps, reps)] & ~tie[np.ix_(reps, reps)]
    order = PartialOrder(n, group_of, rel)
    order.check()
    return order


def induced_order(M, I, X, tol=TIE_TOL):
    """Order induced on the samples by ``M(I)^T X_i``."""
    M = np.asarray(M, dtype=float)
    if np.any(M < 0):
        raise NonnegativityError("M has a negative entry")
    return order_from_points(projections(M, I, X), tol)


# ---------------------------------------------------------------------------
# unconstrained isotonic regression
# ---------------------------------------------------------------------------

def pava(y, w):
    """Weighted pool-adjacent-violators for a nondecreasing fit of a sequence."""
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    means, weights, sizes = [], [], []
    for yi, wi in zip(y, w):
        m, ww, sz = yi, wi, 1
        while means and means[-1] >= m:
            pm, pw, ps = means.pop(), weights.pop(), sizes.pop()
            m = (pm * pw + m * ww) / (pw + ww)
            ww += pw
            sz += ps
        means.append(m)
        weights.append(ww)
        sizes.append(sz)
    return np.repeat(means, sizes)


def _max_flow_source_side(n, source_caps, sink_caps, arcs):
    """Residual-reachable set from the source after a Dinic max flow.

    Nodes ``0..n-1``; source and sink are implicit. ``arcs`` are infinite
    capacity pairs ``(i, j)``.
    """
    S, T = n, n + 1
    # augmenting paths are followed recursively and can be n + 2 long
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 4 * n + 100))
    head = [[] for _ in range(n + 2)]
    to, cap = [], []

    def add(u, v, c):
        head[u].append(len(to))
        to.append(v)
        cap.append(c)
        head[v].append(len(to))
        to.append(u)
        cap.append(0.0)

    for i, c in enumerate(source_caps):
        if c > 0:
            add(S, i, c)
    for i, c in enumerate(sink_caps):
        if c > 0:
            add(i, T, c)
    for i, j in arcs:
        add(i, j, inf)
    scale = sum(source_caps) + sum(sink_caps)
    eps = 1e-13 * max(scale, 1e-300)

    def bfs():
        level = [-1] * (n + 2)
        level[S] = 0
        q = deque([S])
        while q:
            u = q.popleft()
            for e in head[u]:
                if cap[e] > eps and level[to[e]] < 0:
                    level[to[e]] = level[u] + 1
                    q.append(to[e])
        return level

    while True:
        level = bfs()
        if level[T] < 0:
            break
        ptr = [0] * (n + 2)

        def push(u, f):
            if u == T:
                return f
            while ptr[u] < len(head[u]):
                e = head[u][ptr[u]]
                v = to[e]
                if cap[e] > eps and level[v] == level[u] + 1:
                    got = push(v, min(f, cap[e]))
                    if got > 0:
                        cap[e] -= got
                        cap[e ^ 1] += got
                        return got
                ptr[u] += 1
            return 0.0

        while push(S, inf) > 0:
            pass
    return np.array([lv >= 0 for lv in bfs()[:n]], dtype=bool)


def _partition_fit(ybar, w, relation):
    """Exact weighted isotonic fit on a DAG by recursive closure splitting.

    For a block with weighted mean ``m`` the maximum-weight upper set under
    weights ``w (ybar - m)`` is found by a minimum cut. An empty optimum means
    the whole block is one level set at ``m``; otherwise the upper set and
    its complement are solved separately.
    """
    G = ybar.size
    fit = np.empty(G)
    stack = [np.arange(G)]
    while stack:
        block = stack.pop()
        m = float(np.dot(w[block], ybar[block]) / w[block].sum())
        if block.size == 1:
            fit[block] = m
            continue
        c = w[block] * (ybar[block] - m)
        sub = relation[np.ix_(block, block)]
        arcs = list(zip(*map(lambda a: a.tolist(), np.nonzero(sub))))
        upper = _max_flow_source_side(block.size, np.maximum(c, 0.0).tolist(),
                                      np.maximum(-c, 0.0).tolist(), arcs)
        if not upper.any() or upper.all() or c[upper].sum() <= 1e-13 * np.abs(c).sum():
            fit[block] = m
            continue
        stack.append(block[upper])
        stack.append(block[~upper])
    return fit


def isotonic_fit(order, Y, b=None):
    """Least-squares monotone fit for ``order``, clipped to ``[0, b]``.

    Tied points share one value. With ``b=None`` the unconstrained isotonic
    projection is returned.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.shape != (order.n,):
        raise ValueError(f"expected {order.n} responses, got shape {Y.shape}")
    if b is not None and not b > 0:
        raise ValueError("b must be > 0")
    order.check()
    G = order.n_groups
    w = np.bincount(order.group_of, minlength=G).astype(float)
    ybar = np.bincount(order.group_of, weights=Y, minlength=G) / w
    if order.is_chain():
        t = order.topological_order()
        gfit = np.empty(G)
        gfit[t] = pava(ybar[t], w[t])
    else:
        gfit = _partition_fit(ybar, w, order.relation)
    if b is not None:
        gfit = np.clip(gfit, 0.0, b)
    return gfit[order.group_of]


def objective(Y, F):
    return float(np.sum((np.asarray(Y) - np.asarray(F)) ** 2))


# ---------------------------------------------------------------------------
# sparse search over index sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SparseIsoResult:
    I: tuple
    F: np.ndarray
    objective: float
    points: np.ndarray  # n x k anchor locations M(I)^T X_i
    evaluated: int = 0

    @property
    def anchors(self):
        return list(zip(self.points, self.F))


def canonical_index_sets(M, s, d=None):
    """Index sets that can give distinct projections, in lexicographic order.

    Rows of ``M`` that are zero never change ``M(I)^T X``; each choice of
    nonzero rows is padded with the lowest-numbered zero rows, which is the
    lexicographically smallest set realizing it.
    """
    M = np.asarray(M, dtype=float)
    d = M.shape[0] if d is None else d
    if not 1 <= s <= d:
        raise ValueError(f"s must lie in [1, {d}]")
    nz = [i for i in range(d) if np.any(M[i] != 0)]
    zero = [i for i in range(d) if i not in set(nz)]
    out = []
    for t in range(max(0, s - len(zero)), min(s, len(nz)) + 1):
        for J in combinations(nz, t):
            out.append(tuple(sorted(J + tuple(zero[:s - t]))))
    return sorted(set(out))


def _check_budget(d, s, budget):
    if budget is not None and comb(d, s) > budget:
        raise EnumerationBudgetError(
            f"C({d}, {s}) = {comb(d, s)} index sets exceeds the budget of {budget}")


def sparse_search(X, Y, M, s, fit_one, budget=100_000, lower_bound=None):
    """Shared driver: minimize ``fit_one(I) -> (F, points)`` over index sets.

    Stops early once an objective reaches ``lower_bound``, which is safe
    because later sets can only tie and ties go to the earlier set.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    if np.any(M < 0):
        raise NonnegativityError("M has a negative entry")
    d = X.shape[1]
    if M.shape[0] != d:
        raise ValueError(f"M has {M.shape[0]} rows but X has {d} columns")
    _check_budget(d, s, budget)
    best = None
    count = 0
    for I in canonical_index_sets(M, s, d):
        F, P = fit_one(I)
        count += 1
        obj = objective(Y, F)
        if best is None or obj < best[2] - 1e-12 * max(1.0, best[2]):
            best = (I, F, obj, P)
        if lower_bound is not None and best[2] <= lower_bound + 1e-12 * max(1.0, lower_bound):
            break
    I, F, obj, P = best
    return I, F, obj, P, count


def sparse_isotonic(X, Y, M, s, b, budget=100_000, prune=True):
    """Best monotone ``[0, b]``-valued fit over all ``s``-row index sets."""
    Y = np.asarray(Y, dtype=float)

    def fit_one(I):
        P = projections(M, I, X)
        return isotonic_fit(order_from_points(P), Y, b), P

    # no index set can beat fitting each response independently
    lb = objective(Y, np.clip(Y, 0.0, b)) if prune else None
    I, F, obj, P, count = sparse_search(X, Y, M, s, fit_one, budget, lb)
    return SparseIsoResult(I, F, obj, P, count)


# ---------------------------------------------------------------------------
# step interpolant
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StepInterpolant:
    """``x -> max{F_i : P_i <= x}``, or 0 when no anchor lies below ``x``."""

    points: np.ndarray
    values: np.ndarray
    tol: float = TIE_TOL
    chunk: int = 4096

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        xs = np.atleast_2d(x)
        out = np.zeros(xs.shape[0])
        for a in range(0, xs.shape[0], self.chunk):
            q = xs[a:a + self.chunk]
            dom = np.all(self.points[None, :, :] <= q[:, None, :] + self.tol, axis=-1)
            vals = np.where(dom, self.values[None, :], -inf)
            out[a:a + self.chunk] = np.maximum(vals.max(axis=1, initial=-inf), 0.0)
        return float(out[0]) if single else out


def step_interpolant(result, M=None, I=None, tol=TIE_TOL):
    """Step function through the anchors of ``result``.

    ``M`` and ``I`` are only consulted when ``result`` carries no anchor
    locations; queries are points of ``R^k`` (already projected).
    """
    P = np.asarray(result.points, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    return StepInterpolant(P, np.asarray(result.F, dtype=float), tol)


# ---------------------------------------------------------------------------
# grid oracle
# ---------------------------------------------------------------------------

def brute_force_fit(order, Y, b, grid_steps=21, max_points=8, max_steps=21):
    """Best monotone assignment on the grid ``{0, b/(m-1), ..., b}``.

    Exhaustive depth-first search over groups in topological order, each
    connected piece of the order handled on its own, with branches cut once
    their cost plus an optimistic completion exceeds the incumbent. Meant as
    an independent test oracle on tiny instances.
    """
    Y = np.asarray(Y, dtype=float)
    if order.n > max_points or grid_steps > max_steps or grid_steps < 2:
        raise ValueError(f"oracle limited to n <= {max_points} and 2 <= grid steps <= {max_steps}")
    order.check()
    grid = np.linspace(0.0, b, grid_steps)
    G = order.n_groups
    groups = order.groups
    # cost[g, v]: squared error of group g at grid value v
    cost = np.array([[np.sum((Y[idx] - v) ** 2) for v in grid] for idx in groups])
    rel = order.relation
    ncomp, comp = connected_components(csr_matrix(rel | rel.T), directed=False)
    topo = order.topological_order()
    assign = np.zeros(G, dtype=np.intp)
    for c in range(ncomp):
        seq = [int(g) for g in topo if comp[g] == c]
        preds = [[seq.index(int(h)) for h in np.flatnonzero(rel[:, g]) if comp[h] == c]
                 for g in seq]
        # optimistic completion: each remaining group at its own best value
        tail = np.concatenate([np.cumsum(cost[seq].min(axis=1)[::-1])[::-1], [0.0]])
        best = [inf, None]
        cur = [0] * len(seq)

        def dfs(pos, acc):
            if acc + tail[pos] >= best[0]:
                return
            if pos == len(seq):
                best[0], best[1] = acc, list(cur)
                return
            lo = max((cur[p] for p in preds[pos]), default=0)
            row = cost[seq[pos]]
            for v in sorted(range(lo, grid_steps), key=lambda j: (row[j], j)):
                cur[pos] = v
                dfs(pos + 1, acc + row[v])

        dfs(0, 0.0)
        for g, v in zip(seq, best[1]):
            assign[g] = v
    return grid[assign][order.group_of]
