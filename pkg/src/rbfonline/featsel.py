"""Per-target feature selection: forward stepwise R^2 with a VIF admission rule."""
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import SelectionError, ShapeError

logger = logging.getLogger(__name__)

# R^2 this close to 1 counts as perfect collinearity
COLLINEAR_TOL = 1e-10


@dataclass(frozen=True)
class FeatureSelection:
    target_id: object
    ordered_features: tuple = ()
    r2_path: tuple = ()
    vifs: tuple = ()

    def __post_init__(self):
        if len(set(self.ordered_features)) != len(self.ordered_features):
            raise SelectionError("duplicate features in selection")
        if any(b < a for a, b in zip(self.r2_path, self.r2_path[1:])):
            raise SelectionError("r2_path must be non-decreasing")

    def to_row(self):
        fmt = lambda xs: ";".join(f"{x:.6g}" for x in xs)  # noqa: E731
        return "\t".join([
            str(self.target_id),
            ";".join(str(f) for f in self.ordered_features),
            fmt(self.r2_path),
            fmt(self.vifs),
        ])

    @classmethod
    def from_row(cls, line):
        target, feats, r2, vifs = line.rstrip("\n").split("\t")
        parse = lambda s: tuple(float(x) for x in s.split(";")) if s else ()  # noqa: E731
        return cls(target, tuple(f for f in feats.split(";") if f), parse(r2), parse(vifs))


SELECTION_HEADER = "target\tordered_features\tr2_path\tvifs"


def write_selections(selections, path):
    with open(path, "w") as fh:
        fh.write(SELECTION_HEADER + "\n")
        for sel in selections:
            fh.write(sel.to_row() + "\n")


def read_selections(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    return [FeatureSelection.from_row(line) for line in lines[1:] if line]


def _ols_r2(Z, y):
    """In-sample R^2 of OLS with intercept, or None when the design is rank deficient."""
    A = np.column_stack([np.ones(len(y)), Z])
    coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < A.shape[1]:
        return None
    resid = y - A @ coef
    yc = y - y.mean()
    return 1.0 - float(resid @ resid) / float(yc @ yc)


def _check_inputs(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ShapeError(f"X {X.shape} and y {y.shape} are not row-aligned")
    if np.ptp(y) == 0.0:
        raise SelectionError("target has zero variance")
    return X, y


def vif(X):
    """Variance inflation factor of every column; ``inf`` flags perfect collinearity."""
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    if d == 1:
        return np.ones(1)
    if n <= d:
        raise ShapeError(f"vif needs more rows than features, got {n}x{d}")
    out = np.empty(d)
    for j in range(d):
        xj = X[:, j]
        xc = xj - xj.mean()
        sst = float(xc @ xc)
        if sst == 0.0:
            out[j] = np.inf
            continue
        A = np.column_stack([np.ones(n), np.delete(X, j, axis=1)])
        coef, *_ = np.linalg.lstsq(A, xj, rcond=None)
        resid = xj - A @ coef
        r2 = 1.0 - float(resid @ resid) / sst
        out[j] = np.inf if r2 >= 1.0 - COLLINEAR_TOL else 1.0 / (1.0 - r2)
    return out


def _stepwise(X, y, max_features, min_r2_gain, vif_threshold, names, target_id):
    X, y = _check_inputs(X, y)
    d = X.shape[1]
    names = tuple(range(d)) if names is None else tuple(names)
    chosen, path = [], []
    current = 0.0
    while len(chosen) < max_features:
        scored = []
        for c in range(d):
            if c in chosen:
                continue
            r2 = _ols_r2(X[:, chosen + [c]], y)
            if r2 is not None:
                scored.append((-r2, c))
        if not scored:
            break
        # best R^2 first; equal R^2 falls back to the lowest column index
        scored.sort()
        pick = None
        for neg_r2, c in scored:
            if vif_threshold is None or np.all(vif(X[:, chosen + [c]]) <= vif_threshold):
                pick = (c, -neg_r2)
                break
        if pick is None:
            break
        c, r2 = pick
        if r2 - current < min_r2_gain:
            break
        chosen.append(c)
        path.append(max(r2, current))
        current = path[-1]
        if r2 >= 1.0 - COLLINEAR_TOL:
            break
    vifs = tuple(vif(X[:, chosen])) if chosen and vif_threshold is not None else ()
    return FeatureSelection(target_id, tuple(names[c] for c in chosen), tuple(path), vifs), chosen


def forward_stepwise(X, y, max_features=5, min_r2_gain=0.005, names=None, target_id=None):
    """Greedy OLS forward selection maximising in-sample R^2 (with intercept).

    Rank-deficient candidates are skipped. Stops at ``max_features`` or when the
    best available gain falls below ``min_r2_gain``.
    """
    sel, _ = _stepwise(X, y, max_features, min_r2_gain, None, names, target_id)
    return sel


def select_features(X, y, max_features=5, min_r2_gain=0.005, vif_threshold=5.0,
                    names=None, target_id=None):
    """Forward stepwise selection that only admits candidates keeping every VIF <= threshold."""
    sel, chosen = _stepwise(X, y, max_features, min_r2_gain, vif_threshold, names, target_id)
    if not chosen:
        logger.warning("no admissible feature for target %s; model falls back to bias only",
                       target_id)
    return sel


def select_indices(X, y, **kwargs):
    """Like :func:`select_features` but returns column indices instead of names."""
    X = np.asarray(X)
    sel = select_features(X, y, names=range(X.shape[1]), **kwargs)
    return list(sel.ordered_features), sel
