"""Symmetric eigendecomposition by cyclic Jacobi rotations."""

from dataclasses import dataclass

import numpy as np
from numba import njit


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray   # descending
    eigenvectors: np.ndarray  # columns aligned with eigenvalues
    sweeps: int = 0

    def reconstruct(self):
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.T


@njit(cache=True)
def _jacobi_sweeps(a, tol_rel, max_sweeps):
    n = a.shape[0]
    v = np.eye(n)
    norm = np.sqrt(np.sum(a * a))
    sweeps = 0
    while sweeps < max_sweeps:
        off = 0.0
        for p in range(n):
            for q in range(n):
                if p != q:
                    off += a[p, q] * a[p, q]
        if np.sqrt(off) <= tol_rel * norm:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for r in range(n):
                    arp = a[r, p]
                    arq = a[r, q]
                    a[r, p] = c * arp - s * arq
                    a[r, q] = s * arp + c * arq
                for r in range(n):
                    apr = a[p, r]
                    aqr = a[q, r]
                    a[p, r] = c * apr - s * aqr
                    a[q, r] = s * apr + c * aqr
                # exact zero by construction of the rotation
                a[p, q] = 0.0
                a[q, p] = 0.0
                for r in range(n):
                    vrp = v[r, p]
                    vrq = v[r, q]
                    v[r, p] = c * vrp - s * vrq
                    v[r, q] = s * vrp + c * vrq
    return a, v, sweeps


def sym_eigen(A, tol=1e-12, max_sweeps=100):
    """Full eigendecomposition of a symmetric matrix.

    The input is symmetrized as ``(A + A.T) / 2`` and diagonalized with
    cyclic Jacobi sweeps until the off-diagonal Frobenius mass falls below
    ``tol * ||A||_F``. Eigenvalues come back in descending order, ties kept
    in diagonal-index order; each eigenvector is signed so that its
    largest-magnitude entry is positive.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    a = 0.5 * (A + A.T)
    diag, V, sweeps = _jacobi_sweeps(a.copy(), tol, max_sweeps)
    vals = np.diag(diag).copy()
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    V = V[:, order]
    lead = np.argmax(np.abs(V), axis=0)
    signs = np.where(V[lead, np.arange(V.shape[1])] < 0, -1.0, 1.0)
    return SpectralDecomposition(vals, V * signs, int(sweeps))
