"""Monotone 1-Lipschitz fitting on projected samples.

Values ``F_i`` at points ``P_i`` extend to a coordinate-wise monotone,
1-Lipschitz function exactly when ``F_i - F_j <= ||(P_i - P_j)^+||`` for
every ordered pair. For a fixed index set the least-squares fit is thus the
Euclidean projection of ``Y`` onto a polytope cut out by these pairwise caps
and the box ``[0, b]^n``, computed here with Dykstra's cyclic projections.
"""

from dataclasses import dataclass
from math import inf

import numpy as np
from numba import njit

from .errors import NonnegativityError, NotInterpolableError
from .isotonic import objective, projections, sparse_search

INTERP_TOL = 1e-12


def _as_points(points):
    pts = [np.atleast_1d(np.asarray(p, dtype=float)) for p, _ in points]
    vals = np.array([float(v) for _, v in points])
    P = np.vstack(pts) if pts else np.zeros((0, 1))
    return P, vals


def positive_part_norms(P):
    """``c[i, j] = ||(P_i - P_j)^+||_2`` for the rows of ``P``."""
    P = np.asarray(P, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    diff = np.maximum(P[:, None, :] - P[None, :, :], 0.0)
    return np.sqrt((diff * diff).sum(axis=-1))


def interpolable(points, tol=INTERP_TOL):
    """Whether ``[(x_i, y_i)]`` admits a monotone 1-Lipschitz interpolant."""
    if len(points) <= 1:
        return True
    P, y = _as_points(points)
    caps = positive_part_norms(P)
    return bool(np.all(y[:, None] - y[None, :] <= caps + tol))


def pairwise_caps(M, I, X):
    M = np.asarray(M, dtype=float)
    if np.any(M < 0):
        raise NonnegativityError("M has a negative entry")
    return positive_part_norms(projections(M, I, X))


@njit(cache=True)
def _dykstra(y, ii, jj, cc, b, tol, max_cycles):
    n = y.shape[0]
    m = ii.shape[0]
    x = y.copy()
    q = np.zeros(m)       # halfspace increments, along e_i - e_j
    pbox = np.zeros(n)
    prev = np.empty(n)
    prev_q = np.empty(m)
    prev_box = np.empty(n)
    cycles = 0
    converged = False
    while cycles < max_cycles:
        cycles += 1
        prev[:] = x
        prev_q[:] = q
        prev_box[:] = pbox
        for e in range(m):
            i = ii[e]
            j = jj[e]
            yi = x[i] + q[e]
            yj = x[j] - q[e]
            v = yi - yj - cc[e]
            if v > 0.0:
                q[e] = 0.5 * v
                x[i] = yi - 0.5 * v
                x[j] = yj + 0.5 * v
            else:
                q[e] = 0.0
                x[i] = yi
                x[j] = yj
        for i in range(n):
            t = x[i] + pbox[i]
            c = min(max(t, 0.0), b)
            pbox[i] = t - c
            x[i] = c
        # the iterate can return to the same point while the correction
        # terms are still moving, so both enter the stopping rule
        change = 0.0
        for i in range(n):
            change = max(change, abs(x[i] - prev[i]), abs(pbox[i] - prev_box[i]))
        for e in range(m):
            change = max(change, abs(q[e] - prev_q[e]))
        if change < tol:
            converged = True
            break
    return x, converged, cycles


@dataclass(frozen=True)
class PolytopeProjection:
    F: np.ndarray
    converged: bool
    cycles: int


def project_polytope(Y, caps, b, tol=1e-10, max_cycles=1_000_000, prune=2.0):
    """Project ``Y`` onto ``{F : F_i - F_j <= caps[i, j]} ∩ [0, b]^n``.

    Caps of at least ``prune * b`` cannot bind inside the box and are
    skipped.
    """
    Y = np.asarray(Y, dtype=float)
    caps = np.asarray(caps, dtype=float)
    n = Y.size
    if caps.shape != (n, n):
        raise ValueError(f"caps must be {n} x {n}")
    if not b > 0:
        raise ValueError("b must be > 0")
    mask = (caps < prune * b) & ~np.eye(n, dtype=bool)
    ii, jj = np.nonzero(mask)
    F, conv, cycles = _dykstra(Y.copy(), ii.astype(np.int64), jj.astype(np.int64),
                               caps[ii, jj].copy(), float(b), float(tol), int(max_cycles))
    return PolytopeProjection(F, bool(conv), int(cycles))


def lift_to_feasible(F, caps, b):
    """Smallest values ``>= F`` that meet every cap exactly, kept in ``[0, b]``.

    This is the largest monotone 1-Lipschitz minorant construction evaluated
    at the anchors; it removes the tiny violations a finite number of
    projection cycles leaves behind.
    """
    F = np.asarray(F, dtype=float)
    lifted = np.max(F[:, None] - caps, axis=0)
    return np.clip(lifted, 0.0, b)


@dataclass(frozen=True)
class LipschitzFit:
    I: tuple
    F: np.ndarray
    objective: float
    points: np.ndarray
    converged: bool = True
    evaluated: int = 0

    @property
    def anchors(self):
        return list(zip(self.points, self.F))


def lipschitz_sparse_fit(X, Y, M, s, b, budget=100_000, tol=1e-10,
                         max_cycles=1_000_000):
    """Best monotone 1-Lipschitz ``[0, b]``-valued fit over ``s``-row index sets."""
    Y = np.asarray(Y, dtype=float)
    flags = {}

    def fit_one(I):
        P = projections(M, I, X)
        caps = positive_part_norms(P)
        res = project_polytope(Y, caps, b, tol, max_cycles)
        flags[I] = res.converged
        return lift_to_feasible(res.F, caps, b), P

    lb = objective(Y, np.clip(Y, 0.0, b))
    I, F, obj, P, count = sparse_search(X, Y, M, s, fit_one, budget, lb)
    return LipschitzFit(I, F, obj, P, flags[I], count)


@dataclass(frozen=True)
class LipschitzInterpolant:
    """``x -> max(0, max_i {y_i - ||(x_i - x)^+||})``."""

    points: np.ndarray
    values: np.ndarray
    chunk: int = 4096

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        xs = np.atleast_2d(x)
        out = np.zeros(xs.shape[0])
        for a in range(0, xs.shape[0], self.chunk):
            q = xs[a:a + self.chunk]
            gap = np.maximum(self.points[None, :, :] - q[:, None, :], 0.0)
            cand = self.values[None, :] - np.sqrt((gap * gap).sum(axis=-1))
            out[a:a + self.chunk] = np.maximum(cand.max(axis=1, initial=-inf), 0.0)
        return float(out[0]) if single else out


def lipschitz_interpolant(anchors, b=None):
    """Monotone 1-Lipschitz interpolant through interpolable anchors."""
    if not interpolable(anchors):
        raise NotInterpolableError("anchors violate the pairwise cap condition")
    P, y = _as_points(anchors)
    if b is not None and (np.any(y < 0) or np.any(y > b)):
        raise ValueError("anchor values must lie in [0, b]")
    return LipschitzInterpolant(P, y)
