"""Second-order Stein matrix and its truncated sample average."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SteinConfig:
    tau: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be > 0")


def stein_matrix(s0vals, s0primevals):
    """``T[i, j] = s0_i s0_j`` off the diagonal, ``s0_i^2 - s0'_i`` on it."""
    s = np.asarray(s0vals, dtype=float)
    sp = np.asarray(s0primevals, dtype=float)
    if s.ndim != 1 or s.shape != sp.shape:
        raise ValueError(f"length mismatch: {s.shape} vs {sp.shape}")
    T = np.outer(s, s)
    T[np.diag_indices_from(T)] -= sp
    return T


def truncate(v, tau):
    """``sign(v) * min(|v|, tau)``, elementwise."""
    v = np.asarray(v, dtype=float)
    out = np.sign(v) * np.minimum(np.abs(v), tau)
    return float(out) if out.ndim == 0 else out


def sigma_tilde(Y, s0vals, s0primevals, tau, chunk=2048):
    """Robust estimate ``(1/n) sum_i trunc(Y_i, tau) * trunc(T(X_i), tau^2)``.

    ``s0vals`` and ``s0primevals`` are ``n x d`` arrays of ``p0'/p0`` and its
    derivative at each coordinate of each sample. The Stein matrix is built
    from the negated score ``-p0'/p0``, for which ``s^2 - s'`` equals
    ``p0''/p0`` and ``E[Y T(X)]`` is the mean Hessian of the regression
    function. Per-sample terms are accumulated in sample order.
    """
    Y = np.asarray(Y, dtype=float)
    S = np.asarray(s0vals, dtype=float)
    Sp = np.asarray(s0primevals, dtype=float)
    n, d = S.shape
    if Y.shape != (n,) or Sp.shape != (n, d):
        raise ValueError("shape mismatch between Y and score arrays")
    if n < 1:
        raise ValueError("need at least one sample")
    S, Sp = -S, -Sp
    Yt = truncate(Y, tau)
    tau2 = tau * tau
    acc = np.zeros((d, d))
    diag = np.arange(d)
    for start in range(0, n, chunk):
        s = S[start:start + chunk]
        T = s[:, :, None] * s[:, None, :]
        T[:, diag, diag] -= Sp[start:start + chunk]
        acc += np.einsum("n,nij->ij", Yt[start:start + chunk], truncate(T, tau2))
    acc /= n
    return 0.5 * (acc + acc.T)


def sigma_tilde_dataset(data, tau, density=None):
    """``sigma_tilde`` for a :class:`~mmireg.model.Dataset`."""
    from .model import PolyDensity

    density = density or PolyDensity(data.constants.C)
    S, Sp = density.score(data.X)
    return sigma_tilde(data.Y, S, Sp, tau)
