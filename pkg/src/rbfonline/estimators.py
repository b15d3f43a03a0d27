"""Linear heads: exponentially weighted recursive least squares and batch ridge."""
import logging

import numpy as np

from . import kernels
from .errors import ConfigError, DataError, ShapeError, SolverError

logger = logging.getLogger(__name__)

TAU_MIN = 0.8


class EwrlsState:
    """Weights ``theta`` and inverse weighted Gram matrix ``P`` of an EWRLS filter.

    The filter minimises ``sum_i tau^(n-i) (y_i - theta.phi_i)^2 + delta tau^n |theta|^2``.
    """

    def __init__(self, theta, P, tau, delta, n_updates=0, n_reconditions=0):
        self.theta = np.ascontiguousarray(theta, dtype=float)
        self.P = np.ascontiguousarray(P, dtype=float)
        self.tau = float(tau)
        self.delta = float(delta)
        self.n_updates = int(n_updates)
        self.n_reconditions = int(n_reconditions)

    @property
    def dim(self):
        return self.theta.shape[0]

    def copy(self):
        return EwrlsState(self.theta.copy(), self.P.copy(), self.tau, self.delta,
                          self.n_updates, self.n_reconditions)

    def is_positive_definite(self):
        try:
            np.linalg.cholesky(self.P)
        except np.linalg.LinAlgError:
            return False
        return True

    def to_dict(self):
        return {"theta": self.theta.tolist(), "P": self.P.tolist(), "tau": self.tau,
                "delta": self.delta, "n_updates": self.n_updates,
                "n_reconditions": self.n_reconditions}

    @classmethod
    def from_dict(cls, d):
        n = len(d["theta"])
        return cls(np.array(d["theta"], dtype=float), np.array(d["P"], dtype=float).reshape(n, n),
                   d["tau"], d["delta"], d["n_updates"], d.get("n_reconditions", 0))


def ewrls_init(dim, delta=1.0, tau=0.99):
    if dim < 1:
        raise ConfigError(f"dim must be >= 1, got {dim}")
    if not delta > 0:
        raise ConfigError(f"delta must be > 0, got {delta}")
    if not TAU_MIN < tau <= 1.0:
        raise ConfigError(f"tau must lie in ({TAU_MIN}, 1], got {tau}")
    return EwrlsState(np.zeros(dim), np.eye(dim) / delta, tau, delta)


def _phi(state, phi):
    phi = np.ascontiguousarray(phi, dtype=float)
    if phi.shape != (state.dim,):
        raise ShapeError(f"feature vector length {phi.shape} != state dim {state.dim}")
    return phi


def ewrls_predict(state, phi):
    return kernels.dot(state.theta, _phi(state, phi))


def ewrls_step(state, phi, y):
    """Update ``state`` in place with one ``(phi, y)`` pair.

    Returns the prediction made with the weights *before* the update.
    """
    phi = _phi(state, phi)
    if not (np.all(np.isfinite(phi)) and np.isfinite(y)):
        raise DataError("non-finite phi or y; EWRLS update rejected")
    prior, flag = kernels.ewrls_step(state.theta, state.P, phi, float(y), state.tau)
    state.n_updates += 1
    if flag:
        state.n_reconditions += 1
        logger.warning("EWRLS inverse Gram matrix lost positivity; reconditioned")
    return prior


def ewrls_run(state, Phi, Y):
    """Stream rows of ``Phi``/``Y`` through the filter; returns prior predictions.

    Rows with any non-finite entry are skipped and get a NaN prediction.
    """
    Phi = np.ascontiguousarray(Phi, dtype=float)
    Y = np.ascontiguousarray(Y, dtype=float)
    if Phi.ndim != 2 or Phi.shape[1] != state.dim or Y.shape != (Phi.shape[0],):
        raise ShapeError(f"Phi {Phi.shape} / Y {Y.shape} do not match state dim {state.dim}")
    priors = np.empty(Phi.shape[0])
    n_recond = kernels.ewrls_run(state.theta, state.P, Phi, Y, state.tau, priors)
    state.n_updates += int(np.isfinite(priors).sum())
    if n_recond:
        state.n_reconditions += int(n_recond)
        logger.warning("EWRLS reconditioned %d time(s) during stream", n_recond)
    return priors


def ridge_fit(X, y, lam, intercept=False):
    """Solve ``(X^T X + lam * D) theta = X^T y``.

    ``D`` is the identity, except that column 0 is left unpenalised when
    ``intercept`` is true (column 0 is then expected to be all ones).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ShapeError(f"X {X.shape} and y {y.shape} are not row-aligned")
    if X.shape[0] < 1:
        raise ShapeError("ridge_fit needs at least one row")
    if lam < 0:
        raise ConfigError(f"lambda must be >= 0, got {lam}")
    penalty = np.full(X.shape[1], float(lam))
    if intercept:
        penalty[0] = 0.0
    A = X.T @ X + np.diag(penalty)
    if np.linalg.matrix_rank(A) < A.shape[0]:
        raise SolverError("ridge system is singular; use lambda > 0")
    return np.linalg.solve(A, X.T @ y)
