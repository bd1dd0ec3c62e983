"""Two-stage estimator with sample splitting, plus evaluation and bounds.

The first half of the data gives an orthonormal basis ``Qn`` of the index
subspace. On the second half every near-net matrix ``R`` yields a candidate
index matrix ``(Qn R)^+``; a sparse monotone fit is computed for each, and
the candidate with the lowest empirical loss wins.
"""

import time
from dataclasses import dataclass, field
from math import exp, inf, lgamma, log, sqrt
from typing import Optional

import numpy as np

from .errors import EpsilonTooSmallError
from .fantope import SdpConfig, estimate_Q
from .isotonic import StepInterpolant, sparse_isotonic
from .lipschitz import lipschitz_interpolant, lipschitz_sparse_fit
from .model import PolyDensity, estimate_theta
from .net import build_net, cap_fraction

MODES = ("step", "lipschitz")


@dataclass(frozen=True)
class NetConfig:
    N0: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.N0 < 1:
            raise ValueError("N0 must be >= 1")


# ---------------------------------------------------------------------------
# schedules and closed-form bounds
# ---------------------------------------------------------------------------

def theory_params(theta, n, d):
    """Truncation level and penalty weight ``(tau, lam)`` for ``n`` samples."""
    if d < 2:
        raise ValueError("d must be >= 2 (log d must be positive)")
    if n < 1:
        raise ValueError("n must be >= 1")
    if not theta > 0:
        raise ValueError("theta must be > 0")
    ld = log(d)
    return (3.0 * theta * n / (2.0 * ld)) ** (1.0 / 6.0), 10.0 * sqrt(theta * ld / n)


def z_bound(eps1, eps2, C, eta, k, r):
    """Excess-risk bound for net error ``eps1`` and subspace error ``eps2``."""
    if min(eps1, eps2, C, eta, k, r) < 0:
        raise ValueError("all arguments must be nonnegative")
    a = eps1 + eps2 * r
    return 2.0 * eta * C * sqrt(k) * a + C * C * k * a * a


def procrustes_bound(constants, lam):
    """Subspace error radius ``4 sqrt(2) s* lam / rho0``."""
    return 4.0 * sqrt(2.0) * constants.s_star * lam / constants.rho_zero


def _log_comb(n, k):
    return lgamma(n + 1) - lgamma(k + 1) - lgamma(n - k + 1)


@dataclass(frozen=True)
class TheoryReport:
    tau: float
    lam: float
    procrustes_bound: float
    z_value: float
    eps0: float
    alpha: float
    net_term: float
    sdp_term: float
    sample_term: float
    log_sample_term: float

    @property
    def total(self):
        return self.net_term + self.sdp_term + self.sample_term


def failure_bound(eps, delta, constants, n, d, N0):
    """Three-term failure probability bound for ``2n`` samples.

    The last term is assembled in log space; when it exceeds the float
    range ``sample_term`` is ``inf`` and ``log_sample_term`` stays finite.
    """
    c = constants
    if c.theta is None or c.rho_zero is None or c.p_star is None:
        raise ValueError("constants need theta, rho_zero and p_star")
    if not c.rho_zero > 0:
        raise ValueError("rho_zero must be > 0")
    tau, lam = theory_params(c.theta, n, d)
    eps2 = procrustes_bound(c, lam)
    zval = z_bound(delta, eps2, c.C, c.eta, c.k, c.r)
    if not eps > zval:
        raise EpsilonTooSmallError(f"eps={eps} must exceed z={zval}")
    eps0 = eps - zval
    alpha = eps0 / (64.0 * (c.b + c.eta))
    net_term = c.k * (1.0 - cap_fraction(c.k, c.r, delta / sqrt(c.k))) ** N0
    sdp_term = 1.0 / d**2
    ratio = c.b / alpha
    growth = n ** ((c.s_star - 1) / c.s_star)
    log2_big = ratio * log(2.0)
    # 2^(b/alpha) (4 p* C)^s* computed through its logarithm
    log_mix = log2_big + c.s_star * log(4.0 * c.p_star * c.C)
    mix = exp(log_mix) if log_mix < 700 else inf
    bracket = (2.0 * log(2.0) * ratio + mix) * growth - eps0**2 * n / (2**9 * c.b**2)
    log_term = log(4.0) + _log_comb(d, c.s_star) + c.k * log(N0) + bracket
    sample_term = exp(log_term) if log_term < 700 else inf
    return TheoryReport(tau, lam, eps2, zval, eps0, alpha, net_term, sdp_term,
                        sample_term, log_term)


# ---------------------------------------------------------------------------
# subspace distance and Monte-Carlo losses
# ---------------------------------------------------------------------------

def _check_orthonormal(Q, name):
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or not np.allclose(Q.T @ Q, np.eye(Q.shape[1]), atol=1e-6, rtol=0):
        raise ValueError(f"{name} is not orthonormal")
    return Q


def procrustes_align(Qhat, Qstar):
    """Rotation ``P`` (det 1) minimizing ``||Qhat P - Qstar||_F``, and the minimum."""
    Qhat = _check_orthonormal(Qhat, "Qhat")
    Qstar = _check_orthonormal(Qstar, "Qstar")
    if Qhat.shape != Qstar.shape:
        raise ValueError("frames must have the same shape")
    U, _, Vt = np.linalg.svd(Qhat.T @ Qstar)
    D = np.eye(U.shape[0])
    D[-1, -1] = np.sign(np.linalg.det(U @ Vt)) or 1.0
    P = U @ D @ Vt
    return P, float(np.linalg.norm(Qhat @ P - Qstar))


def procrustes_dist(Qhat, Qstar):
    return procrustes_align(Qhat, Qstar)[1]


def _mean_se(v):
    v = np.asarray(v, dtype=float)
    se = float(v.std(ddof=1) / sqrt(v.size)) if v.size > 1 else inf
    return float(v.mean()), se


def l2_loss_mc(fhat, gt, n_mc, seed, with_stderr=False):
    """Monte-Carlo ``E[(fhat(X) - f*(beta*^T X))^2]`` over fresh covariates."""
    if n_mc < 1:
        raise ValueError("n_mc must be >= 1")
    X = gt.sample_X(int(n_mc), np.random.default_rng(seed))
    mean, se = _mean_se((np.asarray(fhat(X), dtype=float) - gt.mean_response(X)) ** 2)
    return (mean, se) if with_stderr else mean


def _fresh_pairs(gt, n_mc, seed):
    rng = np.random.default_rng(seed)
    X = gt.sample_X(int(n_mc), rng)
    eta = gt.constants.eta
    Z = rng.uniform(-eta, eta, int(n_mc)) if eta > 0 else np.zeros(int(n_mc))
    return X, gt.mean_response(X) + Z


@dataclass(frozen=True)
class IntegralComparison:
    lhs: float
    rhs: float
    stderr: float


def norm_integral_check(g, gt, n_mc, seed):
    """Squared distance to the truth against the excess risk, on one draw stream.

    ``stderr`` is the standard error of ``rhs - lhs``, whose mean is zero.
    """
    X, Y = _fresh_pairs(gt, n_mc, seed)
    gx = np.asarray(g(X), dtype=float)
    fx = gt.mean_response(X)
    direct = (gx - fx) ** 2
    excess = (gx - Y) ** 2 - (fx - Y) ** 2
    lhs, _ = _mean_se(direct)
    rhs, _ = _mean_se(excess)
    _, se = _mean_se(excess - direct)
    return IntegralComparison(lhs, rhs, se)


@dataclass(frozen=True)
class SensitivityResult:
    lhs: float
    rhs: float
    stderr: float
    eps1: float
    eps2: float


def sensitivity_check(gt, Qn, R, n_mc, seed):
    """Excess risk of ``f* o (Qn R)^+(I*)`` against its ``z`` bound."""
    c = gt.constants
    P, eps2 = procrustes_align(Qn, gt.Qstar)
    eps1 = float(np.linalg.norm(P @ gt.Rstar - R))
    M = np.maximum(np.asarray(Qn) @ np.asarray(R), 0.0)
    keep = np.zeros(c.d, dtype=bool)
    keep[list(gt.Istar)] = True
    M[~keep] = 0.0
    X, Y = _fresh_pairs(gt, n_mc, seed)
    excess = (gt.fstar(X @ M) - Y) ** 2 - (gt.mean_response(X) - Y) ** 2
    lhs, se = _mean_se(excess)
    return SensitivityResult(lhs, z_bound(eps1, eps2, c.C, c.eta, c.k, c.r), se, eps1, eps2)


# ---------------------------------------------------------------------------
# the estimator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Candidate:
    net_index: tuple
    I: tuple
    empirical_loss: float


@dataclass
class FitResult:
    Qn: np.ndarray
    Rbar: np.ndarray
    In: tuple
    points: np.ndarray
    F: np.ndarray
    mode: str
    empirical_loss: float
    sdp_converged: bool
    tau: float
    lam: float
    n: int
    b: float
    net_index: tuple = ()
    candidates: list = field(default_factory=list)
    wall_time_ms: float = 0.0

    @property
    def M(self):
        """Index matrix ``(Qn Rbar)^+`` restricted to the rows in ``In``."""
        full = np.maximum(self.Qn @ self.Rbar, 0.0)
        out = np.zeros_like(full)
        out[list(self.In)] = full[list(self.In)]
        return out

    @property
    def anchors(self):
        return list(zip(self.points, self.F))

    def interpolant(self):
        if self.mode == "step":
            return StepInterpolant(np.asarray(self.points, dtype=float),
                                   np.asarray(self.F, dtype=float))
        return lipschitz_interpolant(self.anchors, self.b)

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        P = np.atleast_2d(X) @ self.M
        out = self.interpolant()(P)
        return float(out[0]) if single else out


def subspace_stage(first, sdp_cfg=None, tau=None, lam=None, density=None):
    """Estimate ``Qn`` from the first half; returns ``(estimate, tau, lam)``."""
    c = first.constants
    density = density or PolyDensity(c.C)
    sdp_cfg = sdp_cfg or SdpConfig()
    lam = sdp_cfg.lam if lam is None else lam
    if tau is None or lam is None:
        theta = c.theta if c.theta is not None else estimate_theta(density, first.Y)
        t_sched, l_sched = theory_params(theta, first.n, c.d)
        tau = t_sched if tau is None else tau
        lam = l_sched if lam is None else lam
    est = estimate_Q(first, tau, lam, c.k, sdp_cfg, density)
    return est, tau, lam


def search_stage(second, Qn, net, mode="step", budget=100_000):
    """Scan the near-net on the second half; returns the winner and all candidates."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    c = second.constants
    if len(net) == 0:
        raise ValueError("empty near-net")
    cache = {}
    best = None
    candidates = []
    for idx in net.index_tuples():
        R = net.matrix(idx)
        M = np.maximum(Qn @ R, 0.0)
        key = M.tobytes()
        if key not in cache:
            if mode == "step":
                cache[key] = sparse_isotonic(second.X, second.Y, M, c.s_star, c.b, budget)
            else:
                cache[key] = lipschitz_sparse_fit(second.X, second.Y, M, c.s_star, c.b, budget)
        res = cache[key]
        loss = res.objective / second.n
        candidates.append(Candidate(idx, res.I, loss))
        if best is None or loss < best[2]:
            best = (idx, R, loss, res)
    return best, candidates


def fit_mmi(data, net_cfg=None, sdp_cfg=None, mode="step", tau=None, lam=None,
            budget=100_000, density=None):
    """Fit ``f o (Qn R)^+(I)`` by sample splitting.

    ``tau`` and ``lam`` default to the schedules for the first-half size,
    with ``theta`` estimated from the first half when the constants lack it.
    Ties between net candidates go to the earlier net index.
    """
    t0 = time.perf_counter()
    net_cfg = net_cfg or NetConfig()
    c = data.constants
    first, second = data.split()
    est, tau, lam = subspace_stage(first, sdp_cfg, tau, lam, density)
    net = build_net(net_cfg.N0, c.k, c.r, net_cfg.seed)
    (idx, R, loss, res), candidates = search_stage(second, est.Q, net, mode, budget)
    return FitResult(est.Q, R, tuple(res.I), res.points, res.F, mode, float(loss),
                     bool(est.converged), float(tau), float(lam), data.n, c.b, idx,
                     candidates, 1e3 * (time.perf_counter() - t0))

