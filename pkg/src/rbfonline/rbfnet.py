"""Online RBF network and the plain linear forecasters that share its protocol.

All forecasters follow the same delayed-label contract. A prediction issued at
time ``t`` for horizon ``h`` waits in a FIFO queue until its label (the target
return at ``t + h``) is delivered, and only then is it used for learning. The
feature vector used for learning is the one computed at prediction time.
"""
import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ProtocolError, ShapeError, SizingError
from .estimators import EwrlsState, ewrls_init, ewrls_run, ewrls_step, ridge_fit
from .featsel import FeatureSelection
from .prototypes import PrototypeSet, default_k, fit_prototypes, online_update
from .rbfmap import feature_matrix, feature_vector
from .records import ForecastRecord

logger = logging.getLogger(__name__)


@dataclass
class RbfNetConfig:
    k: int = 0  # 0 selects default_k(n_train)
    seed: int = 0
    max_iter: int = 300
    tol: float = 1e-8
    decay: float = 0.99
    shrinkage: float = 0.1
    eps: float = 1e-6
    min_cluster_size: int = 10
    tau: float = 0.99
    delta: float = 1.0
    online_prototypes: bool = True
    online_head: bool = True


@dataclass
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X):
        X = np.asarray(X, dtype=float)
        if X.shape[1] == 0:
            return cls(np.zeros(0), np.ones(0))
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[~(scale > 0)] = 1.0
        return cls(mean, scale)

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def to_dict(self):
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["mean"], dtype=float), np.array(d["scale"], dtype=float))


def _finite_rows(X, y):
    return np.isfinite(y) & np.isfinite(X).all(axis=1)


class Forecaster:
    """Shared streaming protocol; subclasses define features and learning."""

    model_id = "base"

    def __init__(self, selection, standardizer, horizon, target_id):
        if horizon < 1:
            raise ShapeError(f"horizon must be >= 1, got {horizon}")
        self.selection = selection
        self.standardizer = standardizer
        self.horizon = int(horizon)
        self.target_id = target_id
        self.pending = deque()
        self.train_priors = np.empty(0)

    @property
    def n_inputs(self):
        return self.standardizer.mean.shape[0]

    # subclass hooks
    def _features(self, z):
        raise NotImplementedError

    def _predict_phi(self, phi):
        raise NotImplementedError

    def _learn(self, z, phi, y):
        raise NotImplementedError

    def _bulk(self, Z, labels, preds):
        raise NotImplementedError

    def _standardize_row(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_inputs,):
            raise ShapeError(f"expected {self.n_inputs} raw features, got shape {x.shape}")
        return np.ascontiguousarray(self.standardizer.transform(x))

    def predict(self, t, x):
        """Issue the forecast for time ``t`` from raw features ``x`` and queue it."""
        if self.pending and t <= self.pending[-1][0].t:
            raise ProtocolError(f"prediction times must increase; got t={t}")
        if len(self.pending) >= self.horizon:
            raise ProtocolError(
                f"{len(self.pending)} labels outstanding at horizon {self.horizon}; "
                "resolve before predicting again"
            )
        z = self._standardize_row(x)
        if np.all(np.isfinite(z)):
            phi = self._features(z)
            y_hat = self._predict_phi(phi)
        else:
            phi, y_hat = None, np.nan
        rec = ForecastRecord(str(self.target_id), self.model_id, self.horizon, int(t), y_hat)
        self.pending.append((rec, z, phi))
        return rec

    def resolve(self, t, y):
        """Deliver the label of the prediction made at ``t``; labels arrive in order.

        A NaN label or a prediction made from missing features is dropped
        without learning.
        """
        if not self.pending or self.pending[0][0].t != t:
            raise ProtocolError(f"no pending prediction at t={t} to resolve")
        rec, z, phi = self.pending.popleft()
        rec.resolve(y)
        if phi is not None and np.isfinite(y):
            self._learn(z, phi, float(y))
        return rec

    def step(self, t, x, y_now):
        """Resolve the prediction from ``t - h`` with ``y_now`` (if any), then predict at ``t``."""
        done = None
        if self.pending and self.pending[0][0].t == t - self.horizon:
            done = self.resolve(t - self.horizon, y_now)
        return done, self.predict(t, x)

    def drain(self):
        """Drop and return unresolved predictions (end of stream)."""
        out = [rec for rec, _, _ in self.pending]
        self.pending.clear()
        return out

    def run_bulk(self, X, labels):
        """Prequential pass over contiguous rows without the per-step Python overhead.

        ``labels[i]`` is the label for row ``i`` (NaN when unavailable). Label
        ``i`` is applied just before predicting row ``i + h``, as :meth:`step`
        would. Returns the forecast for every row.
        """
        if self.pending:
            raise ProtocolError("run_bulk needs an empty pending queue")
        X = np.asarray(X, dtype=float)
        labels = np.ascontiguousarray(labels, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_inputs or labels.shape != (X.shape[0],):
            raise ShapeError(f"X {X.shape} / labels {labels.shape} mismatch")
        Z = np.ascontiguousarray(self.standardizer.transform(X))
        preds = np.empty(X.shape[0])
        self._bulk(Z, labels, preds)
        return preds


class RbfNetModel(Forecaster):
    """Gaussian RBF hidden layer on standardised features with an EWRLS output head."""

    model_id = "rbfnet"

    def __init__(self, selection, standardizer, prototypes, head, horizon, target_id,
                 online_prototypes=True, online_head=True):
        super().__init__(selection, standardizer, horizon, target_id)
        self.prototypes = prototypes
        self.head = head
        self.online_prototypes = online_prototypes
        self.online_head = online_head
        k = 0 if prototypes is None else prototypes.k
        if head.dim != k + 1:
            raise ShapeError(f"head dimension {head.dim} != k + 1 = {k + 1}")

    @classmethod
    def fit_initial(cls, config, X, y, horizon, target_id=None, selection=None):
        """Standardise, cluster, then stream the training rows once through the head.

        ``X`` holds the raw selected features at time t and ``y`` the target at
        ``t + horizon``.
        """
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ShapeError(f"X {X.shape} and y {y.shape} are not row-aligned")
        ok = _finite_rows(X, y)
        Xo, yo = X[ok], y[ok]
        n, d = Xo.shape
        std = Standardizer.fit(Xo)
        if d == 0:
            pset = None
            Phi = np.ones((n, 1))
        else:
            k = config.k or default_k(n)
            if n < k:
                raise SizingError(f"k={k} exceeds the {n} usable training rows")
            if n < k + d + 2:
                raise SizingError(f"need at least k + d + 2 = {k + d + 2} training rows, got {n}")
            Z = np.ascontiguousarray(std.transform(Xo))
            pset = fit_prototypes(Z, k, config.seed, config.max_iter, config.tol,
                                  config.decay, config.shrinkage, config.eps,
                                  config.min_cluster_size)
            Phi = feature_matrix(Z, pset)
        head = ewrls_init(Phi.shape[1], config.delta, config.tau)
        model = cls(selection, std, pset, head, horizon, target_id,
                    config.online_prototypes, config.online_head)
        model.train_priors = ewrls_run(head, Phi, yo)
        return model

    def _features(self, z):
        if self.prototypes is None:
            return np.ones(1)
        return feature_vector(z, self.prototypes)

    def _predict_phi(self, phi):
        return kernels.dot(self.head.theta, phi)

    def _learn(self, z, phi, y):
        if self.online_prototypes and self.prototypes is not None:
            online_update(self.prototypes, z)
        if self.online_head:
            ewrls_step(self.head, phi, y)

    def _bulk(self, Z, labels, preds):
        h = self.head
        if self.prototypes is None:
            Phi = np.ones((Z.shape[0], 1))
            Phi[~np.isfinite(Z).all(axis=1)] = np.nan
            n = kernels.prequential_linear(Phi, labels, self.horizon, h.theta, h.P, h.tau,
                                           self.online_head, preds)
        else:
            p = self.prototypes
            n = kernels.prequential_rbf(Z, labels, self.horizon, h.theta, h.P, h.tau,
                                        p.means, p.scatters, p.chols, p.weights, p.decay,
                                        p.shrinkage, p.eps, self.online_prototypes,
                                        self.online_head, preds)
        _count_updates(h, Z, labels, self.horizon, self.online_head)
        h.n_reconditions += int(n)

    def to_dict(self):
        return {
            "kind": "rbfnet",
            "target_id": self.target_id,
            "horizon": self.horizon,
            "selection": None if self.selection is None else self.selection.to_row(),
            "standardizer": self.standardizer.to_dict(),
            "prototypes": None if self.prototypes is None else self.prototypes.to_dict(),
            "head": self.head.to_dict(),
            "online_prototypes": self.online_prototypes,
            "online_head": self.online_head,
            "pending": _pending_to_list(self.pending),
        }

    @classmethod
    def from_dict(cls, d):
        pset = None if d["prototypes"] is None else PrototypeSet.from_dict(d["prototypes"])
        sel = None if d["selection"] is None else FeatureSelection.from_row(d["selection"])
        m = cls(sel, Standardizer.from_dict(d["standardizer"]), pset,
                EwrlsState.from_dict(d["head"]), d["horizon"], d["target_id"],
                d["online_prototypes"], d["online_head"])
        _pending_from_list(m, d["pending"])
        return m


class LinearModel(Forecaster):
    """``phi = [1, standardised raw features]`` with an EWRLS (online) or ridge (frozen) head."""

    def __init__(self, selection, standardizer, horizon, target_id, head=None, weights=None):
        super().__init__(selection, standardizer, horizon, target_id)
        if (head is None) == (weights is None):
            raise ShapeError("give exactly one of an EWRLS head or frozen ridge weights")
        self.head = head
        self.weights = None if weights is None else np.ascontiguousarray(weights, dtype=float)
        self.model_id = "ewrls" if head is not None else "ridge"
        dim = head.dim if head is not None else self.weights.shape[0]
        if dim != self.n_inputs + 1:
            raise ShapeError(f"head dimension {dim} != inputs + 1 = {self.n_inputs + 1}")

    @classmethod
    def fit_ewrls(cls, X, y, horizon, target_id=None, selection=None, tau=0.99, delta=1.0):
        X, y, std, Phi = cls._design(X, y)
        head = ewrls_init(Phi.shape[1], delta, tau)
        model = cls(selection, std, horizon, target_id, head=head)
        model.train_priors = ewrls_run(head, Phi, y)
        return model

    @classmethod
    def fit_ridge(cls, X, y, horizon, target_id=None, selection=None, lam=1.0):
        X, y, std, Phi = cls._design(X, y)
        w = ridge_fit(Phi, y, lam, intercept=True)
        model = cls(selection, std, horizon, target_id, weights=w)
        model.train_priors = Phi @ w
        return model

    @staticmethod
    def _design(X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ShapeError(f"X {X.shape} and y {y.shape} are not row-aligned")
        ok = _finite_rows(X, y)
        X, y = X[ok], y[ok]
        if X.shape[0] == 0:
            raise SizingError("no complete training rows")
        std = Standardizer.fit(X)
        Phi = np.column_stack([np.ones(X.shape[0]), std.transform(X)])
        return X, y, std, Phi

    @property
    def theta(self):
        return self.head.theta if self.head is not None else self.weights

    def _features(self, z):
        phi = np.empty(z.shape[0] + 1)
        phi[0] = 1.0
        phi[1:] = z
        return phi

    def _predict_phi(self, phi):
        return kernels.dot(self.theta, phi)

    def _learn(self, z, phi, y):
        if self.head is not None:
            ewrls_step(self.head, phi, y)

    def _bulk(self, Z, labels, preds):
        Phi = np.ascontiguousarray(np.column_stack([np.ones(Z.shape[0]), Z]))
        Phi[~np.isfinite(Z).all(axis=1)] = np.nan
        if self.head is None:
            dummy_P = np.eye(Phi.shape[1])
            kernels.prequential_linear(Phi, labels, self.horizon, self.weights.copy(), dummy_P,
                                       1.0, False, preds)
            return
        h = self.head
        n = kernels.prequential_linear(Phi, labels, self.horizon, h.theta, h.P, h.tau, True,
                                       preds)
        _count_updates(h, Z, labels, self.horizon, True)
        h.n_reconditions += int(n)

    def to_dict(self):
        return {
            "kind": self.model_id,
            "target_id": self.target_id,
            "horizon": self.horizon,
            "selection": None if self.selection is None else self.selection.to_row(),
            "standardizer": self.standardizer.to_dict(),
            "head": None if self.head is None else self.head.to_dict(),
            "weights": None if self.weights is None else self.weights.tolist(),
            "pending": _pending_to_list(self.pending),
        }

    @classmethod
    def from_dict(cls, d):
        sel = None if d["selection"] is None else FeatureSelection.from_row(d["selection"])
        head = None if d["head"] is None else EwrlsState.from_dict(d["head"])
        m = cls(sel, Standardizer.from_dict(d["standardizer"]), d["horizon"], d["target_id"],
                head=head, weights=d["weights"])
        _pending_from_list(m, d["pending"])
        return m


def _count_updates(head, Z, labels, h, active):
    if not active:
        return
    m = Z.shape[0]
    if m <= h:
        return
    ok = np.isfinite(labels[: m - h]) & np.isfinite(Z[: m - h]).all(axis=1)
    head.n_updates += int(ok.sum())


def _pending_to_list(pending):
    return [
        {"t": rec.t, "y_hat": rec.y_hat, "z": z.tolist(),
         "phi": None if phi is None else phi.tolist()}
        for rec, z, phi in pending
    ]


def _pending_from_list(model, items):
    for it in items:
        rec = ForecastRecord(str(model.target_id), model.model_id, model.horizon, it["t"],
                             it["y_hat"])
        phi = None if it["phi"] is None else np.array(it["phi"], dtype=float)
        model.pending.append((rec, np.array(it["z"], dtype=float), phi))
