"""Fantope-constrained sparse PCA by ADMM, and the subspace estimate.

Solves

    max  Tr(W Sigma) - lam * ||W||_1
    s.t. 0 <= W <= I,  Tr(W) = k

by splitting ``W = Z``: the ``W`` step projects onto the Fantope, the ``Z``
step soft-thresholds. The leading ``k`` eigenvectors of the solution span
the estimated index subspace.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import SpectralDecomposition, sym_eigen  # noqa: F401
from .stein import sigma_tilde_dataset


@dataclass(frozen=True)
class SdpConfig:
    lam: Optional[float] = None  # None: use the theoretical schedule
    rho: float = 1.0
    max_iter: int = 5000
    primal_tol: float = 1e-7
    dual_tol: float = 1e-7
    penalty_sign: str = "subtract"
    # residual balancing; rho is the starting value
    adaptive_rho: bool = True

    def __post_init__(self):
        if self.lam is not None and self.lam < 0:
            raise ValueError("lam must be >= 0")
        if not self.rho > 0:
            raise ValueError("rho must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not (self.primal_tol > 0 and self.dual_tol > 0):
            raise ValueError("tolerances must be > 0")
        if self.penalty_sign not in ("subtract", "add-as-printed"):
            raise ValueError(f"unknown penalty_sign {self.penalty_sign!r}")


@dataclass(frozen=True)
class SdpResult:
    W: np.ndarray
    objective: float
    converged: bool
    iterations: int


def _fantope_eigenvalues(lam, k, tol=1e-12, max_iter=500):
    """Shift ``theta`` so that ``sum clip(lam - theta, 0, 1) == k``."""
    def trace(theta):
        return np.clip(lam - theta, 0.0, 1.0).sum()

    lo, hi = lam.min() - 1.0, lam.max()
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        t = trace(mid)
        if abs(t - k) <= tol:
            break
        if t > k:
            lo = mid
        else:
            hi = mid
        if hi - lo <= np.finfo(float).eps * max(1.0, abs(mid)):
            break
    gamma = np.clip(lam - mid, 0.0, 1.0)
    # close the remaining trace gap on the fractional eigenvalues
    inner = (gamma > 0) & (gamma < 1)
    if inner.any():
        gamma[inner] = np.clip(gamma[inner] + (k - gamma.sum()) / inner.sum(), 0.0, 1.0)
    return gamma


def fantope_project(A, k):
    """Frobenius projection onto ``{W : 0 <= W <= I, Tr W = k}``."""
    A = np.asarray(A, dtype=float)
    d = A.shape[0]
    if not 1 <= k <= d:
        raise ValueError(f"k must lie in [1, {d}], got {k}")
    eig = sym_eigen(A)
    gamma = _fantope_eigenvalues(eig.eigenvalues, k)
    V = eig.eigenvectors
    W = (V * gamma) @ V.T
    return 0.5 * (W + W.T)


def sdp_objective(W, sigma, lam, penalty_sign="subtract"):
    sign = -1.0 if penalty_sign == "subtract" else 1.0
    return float(np.sum(W * sigma) + sign * lam * np.abs(W).sum())


def _soft_threshold(V, t):
    return np.sign(V) * np.maximum(np.abs(V) - t, 0.0)


def solve_sdp(sigma, k, cfg=None, lam=None):
    """ADMM for the Fantope program.

    ``lam`` overrides ``cfg.lam``; one of them must be set. With the
    ``add-as-printed`` penalty sign the ``Z`` step expands instead of
    shrinking, which turns the problem nonconvex; it is kept only for
    comparison runs.
    """
    cfg = cfg or SdpConfig()
    lam = cfg.lam if lam is None else lam
    if lam is None:
        raise ValueError("no penalty weight given")
    sigma = np.asarray(sigma, dtype=float)
    if not np.all(np.isfinite(sigma)):
        raise ValueError("sigma has non-finite entries")
    sigma = 0.5 * (sigma + sigma.T)
    d = sigma.shape[0]
    rho = cfg.rho
    Z = np.zeros((d, d))
    U = np.zeros((d, d))
    best_W, best_obj = None, -np.inf
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        W = fantope_project(Z - U + sigma / rho, k)
        Z_prev = Z
        if cfg.penalty_sign == "subtract":
            Z = _soft_threshold(W + U, lam / rho)
        else:
            V = W + U
            Z = V + np.sign(V) * (lam / rho)
        U = U + W - Z
        obj = sdp_objective(W, sigma, lam, cfg.penalty_sign)
        if obj > best_obj:
            best_W, best_obj = W, obj
        primal = np.linalg.norm(W - Z)
        dual = rho * np.linalg.norm(Z - Z_prev)
        if primal <= cfg.primal_tol and dual <= cfg.dual_tol:
            converged = True
            break
        if cfg.adaptive_rho and it % 10 == 0:
            if primal > 10.0 * dual:
                rho *= 2.0
                U = U / 2.0
            elif dual > 10.0 * primal:
                rho /= 2.0
                U = U * 2.0
    if converged:
        best_W, best_obj = W, obj
    return SdpResult(best_W, best_obj, converged, it)


@dataclass(frozen=True)
class SubspaceEstimate:
    Q: np.ndarray
    W: np.ndarray
    sigma: np.ndarray
    converged: bool
    tau: float
    lam: float


def leading_eigenvectors(W, k):
    return sym_eigen(W).eigenvectors[:, :k]


def estimate_Q(data, tau, lam, k, cfg=None, density=None):
    """Estimate an orthonormal basis of the index subspace."""
    cfg = cfg or SdpConfig()
    sigma = sigma_tilde_dataset(data, tau, density)
    res = solve_sdp(sigma, k, cfg, lam=lam)
    return SubspaceEstimate(leading_eigenvectors(res.W, k), res.W, sigma,
                            res.converged, tau, lam)
