"""Gaussian hidden-unit activations and the biased feature vector ``[1, phi_1..phi_k]``."""
import numpy as np

from . import kernels
from .errors import ShapeError


def _row(x, dim):
    x = np.ascontiguousarray(x, dtype=float)
    if x.shape != (dim,):
        raise ShapeError(f"expected a feature row of length {dim}, got shape {x.shape}")
    return x


def rbf_activation(x, mean, chol):
    """``exp(-0.5 (x - mean)^T Sigma^{-1} (x - mean))`` with ``Sigma = chol @ chol.T``."""
    mean = np.ascontiguousarray(mean, dtype=float)
    x = _row(x, mean.shape[0])
    chol = np.ascontiguousarray(chol, dtype=float)
    if chol.shape != (mean.shape[0], mean.shape[0]):
        raise ShapeError(f"Cholesky factor shape {chol.shape} does not match dim {mean.shape[0]}")
    return float(np.exp(-0.5 * kernels.chol_quad(chol, x - mean)))


def prototype_activation(x, pset, j):
    return rbf_activation(x, pset.means[j], pset.chols[j])


def feature_vector(x, pset):
    """Length ``k + 1`` vector: a leading 1 then each prototype's activation, in order."""
    x = _row(x, pset.dim)
    out = np.empty(pset.k + 1)
    kernels.rbf_row(x, pset.means, pset.chols, out)
    return out


def feature_matrix(X, pset):
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != pset.dim:
        raise ShapeError(f"expected rows of length {pset.dim}, got shape {X.shape}")
    return kernels.rbf_matrix(X, pset.means, pset.chols)
