"""Random near-nets on the radius-``r`` sphere and their coverage bound.

A net stores ``N0`` points drawn uniformly from the sphere of radius ``r``
in ``R^k``. The matrix net is every ``k x k`` matrix whose columns are net
points; it is enumerated lazily as index tuples in lexicographic order.
"""

from dataclasses import dataclass
from itertools import product
from math import asin, pi, sqrt

import numpy as np
from scipy import integrate


def sample_sphere(k, r, rng):
    """Uniform point on the sphere of radius ``r`` in ``R^k``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not r > 0:
        raise ValueError("r must be > 0")
    while True:
        z = rng.standard_normal(k)
        norm = np.linalg.norm(z)
        if norm > 0:
            break
    u = z / norm
    # a final renormalization keeps the norm at r to the last bit
    return r * u / np.linalg.norm(u)


@dataclass(frozen=True)
class NearNet:
    vectors: np.ndarray  # N0 x k, rows on the sphere
    r: float
    seed: object = None

    @property
    def n_points(self):
        return self.vectors.shape[0]

    @property
    def k(self):
        return self.vectors.shape[1]

    def __len__(self):
        return self.n_points ** self.k

    def index_tuples(self, start=0, stop=None):
        """Lexicographic column-index tuples, optionally a slice of them."""
        it = product(range(self.n_points), repeat=self.k)
        stop = len(self) if stop is None else min(stop, len(self))
        for pos, idx in enumerate(it):
            if pos >= stop:
                break
            if pos >= start:
                yield idx

    def matrix(self, idx):
        return self.vectors[list(idx)].T.copy()

    def matrices(self):
        for idx in self.index_tuples():
            yield idx, self.matrix(idx)

    def nearest_distance(self, M):
        """``min ||M - R||_F`` over net matrices (columns chosen independently)."""
        M = np.asarray(M, dtype=float)
        d2 = ((M.T[:, None, :] - self.vectors[None, :, :]) ** 2).sum(axis=-1)
        return float(sqrt(d2.min(axis=1).sum()))


def build_net(N0, k, r, seed):
    if N0 < 1:
        raise ValueError("N0 must be >= 1")
    rng = np.random.default_rng(seed)
    vecs = np.array([sample_sphere(k, r, rng) for _ in range(N0)]).reshape(N0, k)
    return NearNet(vecs, float(r), seed)


def cap_fraction(k, r, delta):
    """Share of the sphere within chord distance ``delta`` of ``r e_1``.

    The cap has polar half-angle ``phi = 2 arcsin(delta / 2r)``; its relative
    area is the ratio of ``int_0^phi sin^(k-2)`` to ``int_0^pi sin^(k-2)``.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if delta >= 2 * r:
        return 1.0
    if k == 1:
        # the 0-sphere {-r, r}: only the centre itself is within reach
        return 0.5
    phi = 2.0 * asin(delta / (2.0 * r))
    if k == 2:
        return phi / pi

    def f(t):
        return np.sin(t) ** (k - 2)

    num, _ = integrate.quad(f, 0.0, phi, epsabs=0, epsrel=1e-12, limit=200)
    den, _ = integrate.quad(f, 0.0, pi, epsabs=0, epsrel=1e-12, limit=200)
    return min(1.0, num / den)


def coverage_bound(N0, k, r, eps, clamp=True):
    """Lower bound ``1 - k (1 - q)^N0`` with ``q`` the cap share at ``eps/sqrt(k)``."""
    if not eps > 0:
        raise ValueError("eps must be > 0")
    q = cap_fraction(k, r, eps / sqrt(k))
    val = 1.0 - k * (1.0 - q) ** N0
    return float(min(1.0, max(0.0, val))) if clamp else float(val)


@dataclass(frozen=True)
class NetCheckResult:
    empirical_coverage: float
    bound: float
    trials: int
    hits: int

    @property
    def binomial_sigma(self):
        p = self.bound
        return sqrt(max(p * (1 - p), 0.0) / self.trials)


def net_check(k, r, N0, eps, trials, seed):
    """Frequency over fresh nets of hitting a fixed random target within ``eps``.

    The target is a ``k x k`` matrix with columns drawn on the sphere once
    from ``seed``; each trial builds an independent net.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    target_seq, *trial_seqs = np.random.SeedSequence(seed).spawn(trials + 1)
    trng = np.random.default_rng(target_seq)
    target = np.column_stack([sample_sphere(k, r, trng) for _ in range(k)])
    hits = 0
    for seq in trial_seqs:
        net = build_net(N0, k, r, seq)
        hits += net.nearest_distance(target) <= eps
    return NetCheckResult(hits / trials, coverage_bound(N0, k, r, eps), trials, hits)


def net_size(N0, k):
    return N0 ** k

