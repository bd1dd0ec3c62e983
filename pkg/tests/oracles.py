"""Independent reference computations used across the test suite.

None of these call into the solver code paths they check: the grid searches
enumerate candidate value vectors directly and test the defining
constraints, the Hessian uses finite differences of the transfer function,
and index sets are enumerated with ``itertools`` over all ``C(d, s)`` sets.
"""

from itertools import combinations, product

import numpy as np


def grid_values(b, steps):
    return np.linspace(0.0, b, steps)


def _search_plan(Y, g):
    """Per-point value order (nearest first) and optimistic tail costs."""
    order = [g[np.argsort(np.abs(g - y), kind="stable")] for y in Y]
    best_each = np.array([np.min((g - y) ** 2) for y in Y])
    tail = np.concatenate([np.cumsum(best_each[::-1])[::-1], [0.0]])
    return order, tail


def _componentwise_le(P, tol=1e-12):
    return np.all(P[:, None, :] <= P[None, :, :] + tol, axis=-1)


def monotone_grid_objective(P, Y, b, steps=21):
    """Minimum of ``sum (Y - F)^2`` over grid vectors monotone in ``P``.

    Points are processed in a fixed order and each coordinate is chosen from
    the grid values consistent with already-chosen comparable points, so the
    enumeration covers exactly the feasible grid vectors.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    Y = np.asarray(Y, dtype=float)
    n = Y.size
    le = _componentwise_le(P)
    g = grid_values(b, steps)
    order, tail = _search_plan(Y, g)
    best = [np.inf]
    F = np.zeros(n)

    def rec(i, acc):
        if acc + tail[i] >= best[0]:
            return
        if i == n:
            best[0] = acc
            return
        lo, hi = 0.0, b
        for j in range(i):
            if le[j, i]:
                lo = max(lo, F[j])
            if le[i, j]:
                hi = min(hi, F[j])
        for v in order[i]:
            if lo - 1e-15 <= v <= hi + 1e-15:
                F[i] = v
                rec(i + 1, acc + (Y[i] - v) ** 2)

    rec(0, 0.0)
    return best[0]


def lipschitz_grid_objective(P, Y, b, steps=21):
    """Minimum over grid vectors with ``F_i - F_j <= ||(P_i - P_j)^+||``."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    Y = np.asarray(Y, dtype=float)
    n = Y.size
    diff = np.maximum(P[:, None, :] - P[None, :, :], 0.0)
    caps = np.sqrt((diff ** 2).sum(-1))
    g = grid_values(b, steps)
    order, tail = _search_plan(Y, g)
    best = [np.inf]
    F = np.zeros(n)

    def rec(i, acc):
        if acc + tail[i] >= best[0]:
            return
        if i == n:
            best[0] = acc
            return
        for v in order[i]:
            ok = True
            for j in range(i):
                if v - F[j] > caps[i, j] + 1e-12 or F[j] - v > caps[j, i] + 1e-12:
                    ok = False
                    break
            if ok:
                F[i] = v
                rec(i + 1, acc + (Y[i] - v) ** 2)

    rec(0, 0.0)
    return best[0]


def masked_projection(M, I, X):
    M = np.asarray(M, dtype=float)
    keep = np.zeros(M.shape[0], dtype=bool)
    keep[list(I)] = True
    return np.asarray(X, dtype=float) @ np.where(keep[:, None], M, 0.0)


def exhaustive_sparse(X, Y, M, s, b, inner, steps=21):
    """Minimum of ``inner(P, Y, b, steps)`` over every ``s``-subset of rows."""
    d = np.asarray(X).shape[1]
    return min(inner(masked_projection(M, I, X), Y, b, steps)
               for I in combinations(range(d), s))


def fd_hessian_mean(g, U, h):
    """Mean Hessian of ``g`` over the rows of ``U`` by central differences."""
    k = U.shape[1]
    H = np.zeros((k, k))
    for a, c in product(range(k), repeat=2):
        ea = np.zeros(k)
        ec = np.zeros(k)
        ea[a] = h
        ec[c] = h
        H[a, c] = np.mean(g(U + ea + ec) - g(U + ea - ec) - g(U - ea + ec) + g(U - ea - ec))
        H[a, c] /= 4 * h * h
    return H


def stein_identity_error(gt, n_mc, seed):
    """Relative Frobenius gap between ``mean(Y T(X))`` and ``Q* D0 Q*^T``.

    Returns the gap and the Richardson difference between steps 1e-4 and
    5e-5 of the finite-difference Hessian.
    """
    from mmireg.model import sample_dataset
    from mmireg.stein import sigma_tilde

    data = sample_dataset(gt, n_mc, seed)
    S, Sp = gt.density.score(data.X)
    emp = sigma_tilde(data.Y, S, Sp, np.inf)
    U = data.X @ gt.Qstar

    def g(u):
        return gt.fstar(u @ gt.Rstar)

    D1 = fd_hessian_mean(g, U, 1e-4)
    D2 = fd_hessian_mean(g, U, 5e-5)
    target = gt.Qstar @ D1 @ gt.Qstar.T
    rel = np.linalg.norm(emp - target) / np.linalg.norm(target)
    return float(rel), float(np.abs(D1 - D2).max())


def random_fantope_point(rng, d, k):
    """Feasible point: eigenvalues in [0, 1] summing to ``k``, random basis."""
    V, _ = np.linalg.qr(rng.standard_normal((d, d)))
    lam = rng.dirichlet(np.ones(d)) * k
    for _ in range(100):
        over = lam > 1
        if not over.any():
            break
        excess = (lam[over] - 1).sum()
        lam[over] = 1
        free = ~over & (lam < 1)
        lam[free] += excess * (1 - lam[free]) / (1 - lam[free]).sum()
    return (V * lam) @ V.T


def random_rotation(rng, k):
    Q, R = np.linalg.qr(rng.standard_normal((k, k)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q
