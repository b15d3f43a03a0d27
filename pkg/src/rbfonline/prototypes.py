"""Hidden-unit prototypes: k-means initialisation plus streaming updates.

Each prototype keeps its raw (unshrunk) scatter matrix as state. The
covariance used by the kernel is always derived from it as
``(1 - shrinkage) * S + shrinkage * diag(S) + eps * I``, so repeated online
updates never compound the shrinkage.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DataError, ShapeError, SizingError

logger = logging.getLogger(__name__)

# a handful of tail points makes a needle-thin kernel whose EWRLS weight winds up
MIN_CLUSTER_SIZE = 10


def default_k(n_train):
    return max(2, round(math.sqrt(n_train / 2)))


@dataclass
class Prototype:
    """Read-only view of one hidden unit."""

    mean: np.ndarray
    covariance: np.ndarray
    precision: np.ndarray
    weight: float


@dataclass
class KMeansResult:
    centers: np.ndarray
    labels: np.ndarray
    inertia_path: list
    n_iter: int


class PrototypeSet:
    """k prototypes stored as stacked arrays so kernels can work on them directly.

    Attributes:
        means: (k, d) prototype centres.
        scatters: (k, d, d) raw covariance state per prototype.
        chols: (k, d, d) lower Cholesky factors of the shrunk covariances.
        weights: (k,) decayed sample mass.
    """

    def __init__(self, means, scatters, weights, decay=0.99, shrinkage=0.1, eps=1e-6):
        self.means = np.ascontiguousarray(means, dtype=float)
        self.scatters = np.ascontiguousarray(scatters, dtype=float)
        self.weights = np.ascontiguousarray(weights, dtype=float)
        k, d = self.means.shape
        if k < 1:
            raise SizingError("a prototype set needs k >= 1")
        if self.scatters.shape != (k, d, d) or self.weights.shape != (k,):
            raise ShapeError("scatters/weights do not match means")
        self.decay = float(decay)
        self.shrinkage = float(shrinkage)
        self.eps = float(eps)
        self.chols = np.empty_like(self.scatters)
        for j in range(k):
            self.chols[j] = np.linalg.cholesky(self.covariance(j))

    @property
    def k(self):
        return self.means.shape[0]

    @property
    def dim(self):
        return self.means.shape[1]

    def covariance(self, j):
        return shrink_covariance(self.scatters[j], self.shrinkage, self.eps)

    def precision(self, j):
        L = self.chols[j]
        Linv = np.linalg.inv(L)
        return Linv.T @ Linv

    def __getitem__(self, j):
        return Prototype(self.means[j].copy(), self.covariance(j), self.precision(j),
                         float(self.weights[j]))

    def __len__(self):
        return self.k

    def copy(self):
        return PrototypeSet(self.means.copy(), self.scatters.copy(), self.weights.copy(),
                            self.decay, self.shrinkage, self.eps)

    def to_dict(self):
        return {
            "means": self.means.tolist(),
            "scatters": self.scatters.tolist(),
            "weights": self.weights.tolist(),
            "decay": self.decay,
            "shrinkage": self.shrinkage,
            "eps": self.eps,
        }

    @classmethod
    def from_dict(cls, d):
        k = len(d["means"])
        dim = len(d["means"][0]) if k else 0
        return cls(np.array(d["means"], dtype=float).reshape(k, dim),
                   np.array(d["scatters"], dtype=float).reshape(k, dim, dim),
                   np.array(d["weights"], dtype=float), d["decay"], d["shrinkage"], d["eps"])


def shrink_covariance(S, shrinkage, eps):
    """``(1 - shrinkage) * S + shrinkage * diag(S) + eps * I``."""
    out = (1.0 - shrinkage) * S
    out[np.diag_indices_from(out)] = np.diagonal(S) + eps
    return out


def _kmeanspp(X, k, rng):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centers[j] = X[idx]
        d2 = np.minimum(d2, ((X - centers[j]) ** 2).sum(axis=1))
    return centers


def kmeans_fit(X, k, seed=0, max_iter=300, tol=1e-8):
    """Lloyd's algorithm with k-means++ seeding.

    Stops after ``max_iter`` iterations or when the relative inertia change
    drops below ``tol``. An empty cluster is moved onto the point that lies
    farthest from its assigned centroid.
    """
    X = np.ascontiguousarray(X, dtype=float)
    n = X.shape[0]
    if k < 1:
        raise SizingError(f"k must be >= 1, got {k}")
    if n < k:
        raise SizingError(f"k-means needs at least k={k} rows, got {n}")
    rng = np.random.default_rng(seed)
    centers = _kmeanspp(X, k, rng)
    inertia_path = []
    labels, d2 = kernels.assign(X, centers)
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        inertia = float(d2.sum())
        inertia_path.append(inertia)
        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, X)
        for j in np.flatnonzero(counts == 0):
            far = int(d2.argmax())
            centers[j] = X[far]
            d2[far] = 0.0
        filled = counts > 0
        centers[filled] = sums[filled] / counts[filled, None]
        labels, d2 = kernels.assign(X, centers)
        new_inertia = float(d2.sum())
        if inertia == 0.0 or abs(inertia - new_inertia) <= tol * inertia:
            inertia_path.append(new_inertia)
            break
    return KMeansResult(centers, labels, inertia_path, n_iter)


def estimate_covariances(X, centers, labels, weights=None, decay=0.99, shrinkage=0.1, eps=1e-6,
                         min_members=MIN_CLUSTER_SIZE):
    """Build a :class:`PrototypeSet` from cluster assignments.

    Clusters with fewer than ``max(d + 1, min_members)`` members borrow the
    global diagonal covariance of ``X``.
    """
    X = np.asarray(X, dtype=float)
    k, d = centers.shape
    counts = np.bincount(labels, minlength=k)
    global_diag = np.diag(X.var(axis=0, ddof=1) if X.shape[0] > 1 else np.ones(d))
    scatters = np.empty((k, d, d))
    for j in range(k):
        if counts[j] < max(d + 1, min_members):
            scatters[j] = global_diag
        else:
            scatters[j] = np.atleast_2d(np.cov(X[labels == j], rowvar=False))
    w = counts.astype(float) if weights is None else np.asarray(weights, dtype=float)
    return PrototypeSet(centers, scatters, w, decay, shrinkage, eps)


def fit_prototypes(X, k, seed=0, max_iter=300, tol=1e-8, decay=0.99, shrinkage=0.1, eps=1e-6,
                   min_members=MIN_CLUSTER_SIZE):
    """k-means followed by covariance estimation."""
    km = kmeans_fit(X, k, seed, max_iter, tol)
    return estimate_covariances(X, km.centers, km.labels, None, decay, shrinkage, eps,
                                min_members)


def nearest(pset, x):
    """Index of the prototype with the smallest Mahalanobis distance to ``x``."""
    return int(kernels.nearest_mahalanobis(np.ascontiguousarray(x, dtype=float),
                                           pset.means, pset.chols))


def online_update(pset, x, index=None):
    """Move the nearest prototype (or ``index``) toward ``x`` in place; returns its index.

    Weight follows ``w <- decay * w + 1``; mean and scatter move by ``1/w``.
    """
    x = np.ascontiguousarray(x, dtype=float)
    if x.shape != (pset.dim,):
        raise ShapeError(f"expected a row of length {pset.dim}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DataError("non-finite feature row rejected by online_update")
    j = nearest(pset, x) if index is None else int(index)
    kernels.prototype_update(pset.means, pset.scatters, pset.chols, pset.weights, x, j,
                             pset.decay, pset.shrinkage, pset.eps)
    return j
