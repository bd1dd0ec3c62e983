"""Generative model: covariate density, transfer function, ground truth, samples.

Responses follow ``Y = f*(beta*^T X) + Z`` where the coordinates of ``X`` are
i.i.d. with a compactly supported density on ``[-C, C]``, ``beta*`` is a
nonnegative ``d x k`` matrix with ``s*`` nonzero rows and columns of norm
``r``, ``f*`` is coordinate-wise monotone and 1-Lipschitz with range
``[0, b]``, and ``Z`` is uniform on ``[-eta, eta]``.
"""

from dataclasses import dataclass, field, replace
from math import comb, log, sqrt
from typing import Callable, Optional

import numpy as np
from numba import njit
from scipy import integrate, special

from .errors import InfeasibleGroundTruthError, OutsideSupportError
from .linalg import sym_eigen


@dataclass(frozen=True)
class ModelConstants:
    d: int
    k: int
    s_star: int
    r: float = 1.0
    C: float = 1.0
    b: float = 1.0
    eta: float = 0.0
    # filled in numerically by make_ground_truth when left as None
    theta: Optional[float] = None
    rho_zero: Optional[float] = None
    p_star: Optional[float] = None

    def __post_init__(self):
        for name in ("d", "k", "s_star"):
            if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if not (self.d >= self.s_star >= self.k):
            raise InfeasibleGroundTruthError(
                f"need d >= s_star >= k, got d={self.d}, s_star={self.s_star}, k={self.k}")
        for name in ("r", "C", "b"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not self.eta >= 0:
            raise ValueError("eta must be >= 0")
        for name in ("theta", "p_star"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ValueError(f"{name} must be > 0")


# ---------------------------------------------------------------------------
# covariate density p0(x) ∝ (1 - (x/C)^2)^power on [-C, C]
# ---------------------------------------------------------------------------

@njit(cache=True)
def _bisect_inverse_cdf(u, coef, tol):
    out = np.empty(u.shape[0])
    m = coef.shape[0]
    for i in range(u.shape[0]):
        target = u[i]
        lo = -1.0
        hi = 1.0
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            acc = coef[m - 1]
            for j in range(m - 2, -1, -1):
                acc = acc * mid + coef[j]
            if acc < target:
                lo = mid
            else:
                hi = mid
        out[i] = 0.5 * (lo + hi)
    return out


@dataclass(frozen=True)
class PolyDensity:
    """Density proportional to ``(1 - (x/C)^2)^power`` on ``[-C, C]``.

    Zero mean, twice differentiable, with closed-form score
    ``s0(x) = -2 power x / (C^2 - x^2)``. ``E[s0^6]`` is finite for
    ``power > 5``.
    """

    C: float = 1.0
    power: int = 6
    tag: str = field(default="poly", init=False)

    @property
    def _mass(self):
        # integral of (1 - u^2)^power over [-1, 1]
        return special.beta(0.5, self.power + 1)

    @property
    def p_star(self):
        return float(1.0 / (self.C * self._mass))

    @property
    def variance(self):
        return self.C**2 / (2 * self.power + 3)

    def pdf(self, x):
        u = np.asarray(x, dtype=float) / self.C
        return np.where(np.abs(u) < 1, (1 - u * u) ** self.power, 0.0) * self.p_star

    def _cdf_coefficients(self):
        # antiderivative of sum_j comb(p, j) (-1)^j u^(2j), anchored at u = -1
        p = self.power
        coef = np.zeros(2 * p + 2)
        for j in range(p + 1):
            c = comb(p, j) * (-1) ** j / (2 * j + 1)
            coef[2 * j + 1] = c
            coef[0] += c  # value at -1 is -c for odd powers
        return coef / self._mass

    def cdf(self, x):
        u = np.clip(np.asarray(x, dtype=float) / self.C, -1.0, 1.0)
        return np.polynomial.polynomial.polyval(u, self._cdf_coefficients())

    def sample(self, rng, size, tol=1e-12):
        """Inverse-CDF sampling by bisection on the polynomial CDF."""
        u = rng.random(size)
        flat = np.ascontiguousarray(u, dtype=float).ravel()
        x = _bisect_inverse_cdf(flat, self._cdf_coefficients(), tol / self.C)
        return (x * self.C).reshape(np.shape(u))

    def score(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) >= self.C):
            raise OutsideSupportError(f"|x| must be < C={self.C}")
        gap = self.C**2 - x * x
        s0 = -2.0 * self.power * x / gap
        s0p = -2.0 * self.power * (self.C**2 + x * x) / gap**2
        return s0, s0p

    def score_sixth_moment(self):
        """``E[s0(X)^6]`` by adaptive quadrature."""
        def integrand(x):
            return (2.0 * self.power * x / (self.C**2 - x * x)) ** 6 * float(self.pdf(x))
        val, _ = integrate.quad(integrand, -self.C, self.C, epsabs=0, epsrel=1e-12, limit=200)
        return val


def score(density, x):
    """Score ``s0 = p0'/p0`` and its derivative at ``x`` (scalar or array)."""
    s0, s0p = density.score(x)
    if np.ndim(s0) == 0:
        return float(s0), float(s0p)
    return s0, s0p


# ---------------------------------------------------------------------------
# transfer functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SoftcurveTransfer:
    """``f(v) = (b/k) sum_j sigmoid((v_j - shift) / width)``.

    Monotone, range ``(0, b)``, and 1-Lipschitz whenever
    ``width >= b / (4 sqrt(k))``. Convex for ``v_j < shift``.
    """

    b: float
    k: int
    shift: float
    width: float

    def __post_init__(self):
        if self.width < self.b / (4 * sqrt(self.k)) * (1 - 1e-12):
            raise ValueError("width too small for a 1-Lipschitz transfer")

    def _t(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.k:
            raise ValueError(f"expected trailing dimension {self.k}, got {v.shape}")
        return (v - self.shift) / self.width

    def __call__(self, v):
        return self.b / self.k * special.expit(self._t(v)).sum(axis=-1)

    def gradient(self, v):
        s = special.expit(self._t(v))
        return self.b / (self.k * self.width) * s * (1 - s)

    def hessian_diag(self, v):
        s = special.expit(self._t(v))
        return self.b / (self.k * self.width**2) * s * (1 - s) * (1 - 2 * s)

    def hessian(self, v):
        h = self.hessian_diag(v)
        return h[..., :, None] * np.eye(self.k)


@dataclass(frozen=True)
class TableTransfer:
    """Separable piecewise-linear transfer ``f(v) = (1/k) sum_j h(v_j)``.

    ``h`` interpolates ``(knots, values)`` and is held constant outside the
    knot range. Values must be nondecreasing in ``[0, b]`` with slopes at
    most ``sqrt(k)`` so the sum stays 1-Lipschitz.
    """

    knots: tuple
    values: tuple
    b: float
    k: int

    def __post_init__(self):
        x = np.asarray(self.knots, dtype=float)
        y = np.asarray(self.values, dtype=float)
        if x.shape != y.shape or x.size < 2 or np.any(np.diff(x) <= 0):
            raise ValueError("knots must be strictly increasing and match values")
        if np.any(np.diff(y) < 0) or y.min() < 0 or y.max() > self.b:
            raise ValueError("values must be nondecreasing within [0, b]")
        if np.max(np.diff(y) / np.diff(x)) > sqrt(self.k) * (1 + 1e-12):
            raise ValueError("table slope exceeds the 1-Lipschitz limit")

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        return np.interp(v, self.knots, self.values).mean(axis=-1)

    def hessian(self, v, step=1e-4):
        v = np.asarray(v, dtype=float)
        out = np.zeros(v.shape + (self.k,))
        for j in range(self.k):
            e = np.zeros(self.k)
            e[j] = step
            out[..., j, j] = (self(v + e) - 2 * self(v) + self(v - e)) / step**2
        return out


@dataclass(frozen=True)
class TransferSpec:
    family: str = "softcurve"
    shift: Optional[float] = None
    width: Optional[float] = None
    knots: Optional[tuple] = None
    values: Optional[tuple] = None

    def build(self, constants, density=None):
        c = constants
        if self.family == "softcurve":
            density = density or PolyDensity(c.C)
            # the projected covariates have standard deviation r * sd(X_j)
            spread = c.r * sqrt(density.variance)
            width = self.width if self.width is not None else max(c.b / (4 * sqrt(c.k)), spread)
            # default puts the peak of sigmoid'' at the covariate mean
            shift = self.shift if self.shift is not None else width * log(2 + sqrt(3))
            return SoftcurveTransfer(c.b, c.k, shift, width)
        if self.family == "table":
            return TableTransfer(tuple(self.knots), tuple(self.values), c.b, c.k)
        raise ValueError(f"unknown transfer family {self.family!r}")


# ---------------------------------------------------------------------------
# ground truth and samples
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroundTruth:
    beta: np.ndarray
    Istar: tuple
    Qstar: np.ndarray
    Rstar: np.ndarray
    fstar: Callable
    density: PolyDensity
    constants: ModelConstants
    seed: Optional[int] = None

    def mean_response(self, X):
        return self.fstar(np.asarray(X) @ self.beta)

    def sample_X(self, n, rng):
        return self.density.sample(rng, (n, self.constants.d))


@dataclass
class Dataset:
    X: np.ndarray
    Y: np.ndarray
    constants: ModelConstants

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.Y = np.asarray(self.Y, dtype=float)
        if self.X.ndim != 2 or self.Y.shape != (self.X.shape[0],):
            raise ValueError(f"inconsistent shapes X{self.X.shape}, Y{self.Y.shape}")

    @property
    def n(self):
        return self.X.shape[0]

    def split(self):
        """First and second halves, for sample splitting."""
        if self.n % 2:
            raise ValueError("sample split requires even N")
        h = self.n // 2
        return (Dataset(self.X[:h], self.Y[:h], self.constants),
                Dataset(self.X[h:], self.Y[h:], self.constants))

    def check_bounds(self):
        c = self.constants
        if np.any(np.abs(self.X) > c.C):
            raise ValueError("covariates outside [-C, C]")
        if np.any(self.Y < -c.eta) or np.any(self.Y > c.b + c.eta):
            raise ValueError("responses outside [-eta, b + eta]")


def estimate_theta(density, Y):
    """Sixth-moment bound: max of ``E[s0^6]`` and the empirical ``E[Y^6]``."""
    return max(density.score_sixth_moment(), float(np.mean(np.asarray(Y) ** 6)))


def _hessian(fstar, v):
    if hasattr(fstar, "hessian"):
        return fstar.hessian(v)
    raise TypeError("transfer function has no hessian")


def make_ground_truth(constants, seed, transfer=None, n_mc=20_000):
    """Draw a ground truth satisfying the model assumptions.

    The support ``Istar`` is a uniform ``s_star``-subset of ``range(d)``; the
    nonzero block of ``beta`` has half-normal entries with columns rescaled
    to norm ``r``. ``theta``, ``rho_zero`` and ``p_star`` are filled in
    numerically (``n_mc`` Monte-Carlo draws) unless already set.
    """
    c = constants
    if not isinstance(c, ModelConstants):
        raise TypeError("constants must be ModelConstants")
    structure_seq, mc_seq = np.random.SeedSequence(seed).spawn(2)
    rng = np.random.default_rng(structure_seq)
    density = PolyDensity(c.C)
    for _ in range(100):
        support = np.sort(rng.choice(c.d, size=c.s_star, replace=False))
        block = np.abs(rng.standard_normal((c.s_star, c.k)))
        block *= c.r / np.linalg.norm(block, axis=0)
        gram = sym_eigen(block.T @ block).eigenvalues
        if gram[-1] > 1e-8 * c.r**2 and np.all(block > 0):
            break
    else:
        raise InfeasibleGroundTruthError("could not draw a full-rank index matrix")
    beta = np.zeros((c.d, c.k))
    beta[support] = block
    Q, R = np.linalg.qr(beta)
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    Q, R = Q * signs, R * signs[:, None]

    fstar = (transfer or TransferSpec()).build(c, density)

    mc_rng = np.random.default_rng(mc_seq)
    Xs = density.sample(mc_rng, (n_mc, c.s_star))
    V = Xs @ block
    Z = mc_rng.uniform(-c.eta, c.eta, n_mc) if c.eta > 0 else np.zeros(n_mc)
    Y = fstar(V) + Z
    theta = c.theta if c.theta is not None else estimate_theta(density, Y)
    if c.rho_zero is not None:
        rho = c.rho_zero
    else:
        rho = float(sym_eigen(_hessian(fstar, V).mean(axis=0)).eigenvalues[-1])
    filled = replace(c, theta=theta, rho_zero=rho,
                     p_star=c.p_star if c.p_star is not None else density.p_star)
    return GroundTruth(beta, tuple(int(i) for i in support), Q, R, fstar, density,
                       filled, seed)


def sample_dataset(gt, n, seed):
    """Draw ``n`` i.i.d. samples ``(X, Y)`` from the model."""
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    rng = np.random.default_rng(seed)
    c = gt.constants
    X = gt.sample_X(int(n), rng)
    Z = rng.uniform(-c.eta, c.eta, int(n)) if c.eta > 0 else np.zeros(int(n))
    return Dataset(X, gt.mean_response(X) + Z, c)


def loss(x, y, f):
    """Squared loss ``(f(x) - y)^2``."""
    return (f(x) - y) ** 2


def rescale_model(f, beta, l):
    """Return ``(v -> f(l v), beta / l)``; the composite is unchanged."""
    if not l > 0:
        raise ValueError("scale must be > 0")
    beta = np.asarray(beta, dtype=float)

    def scaled(v):
        return f(l * np.asarray(v, dtype=float))

    return scaled, beta / l


def normalize_columns(f, beta, r):
    """Rescale every nonzero column of ``beta`` to norm ``r``.

    The returned transfer absorbs the per-column factors so that
    ``f_bar(beta_bar^T x) == f(beta^T x)``. Shrinking the argument of a
    1-Lipschitz monotone map keeps it 1-Lipschitz and monotone, so this
    maps the norm-at-most-``r`` class onto the norm-exactly-``r`` class.
    """
    beta = np.asarray(beta, dtype=float)
    norms = np.linalg.norm(beta, axis=0)
    if np.any(norms > r * (1 + 1e-12)):
        raise ValueError("columns must have norm at most r")
    factors = np.where(norms > 0, norms / r, 1.0)
    beta_bar = np.where(norms > 0, beta / np.where(norms > 0, factors, 1.0), beta)

    def f_bar(v):
        return f(np.asarray(v, dtype=float) * factors)

    return f_bar, beta_bar
