"""Forecast metrics, significance tests and report files.

Undefined quantities (no resolved records, zero baseline error, zero sample
variance) are NaN in memory and ``NA`` in files; they are never dropped or
zero-filled.
"""
import itertools
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

logger = logging.getLogger(__name__)

UNDEFINED = math.nan
SIGNIFICANCE = 0.05

SUMMARY_NMSE_ROWS = ("targets", "count", "mean", "std", "min", "25%", "50%", "75%", "max",
                     "se", "t-value", "p-value", "reject-5%")
SUMMARY_ACC_ROWS = ("targets", "count", "mean", "std", "min", "25%", "50%", "75%", "max")


def _resolved(y_true, y_pred):
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    ok = np.isfinite(y_true) & np.isfinite(y_pred)
    return y_true[ok], y_pred[ok]


def mse(y_true, y_pred):
    """Mean squared forecast error over pairs where both values are known."""
    y, yh = _resolved(y_true, y_pred)
    if y.size == 0:
        return UNDEFINED
    e = y - yh
    return float(np.mean(e * e))


def nmse(model_mse, rw_mse):
    if not (rw_mse > 0) or math.isnan(model_mse):
        return UNDEFINED
    return model_mse / rw_mse


def sign(x):
    """Three-valued sign: 1, 0 or -1."""
    return np.sign(x).astype(int) if np.ndim(x) else int(np.sign(x))


def accuracy(y_true, y_pred):
    """Fraction of resolved pairs whose signs agree (zero counts as its own sign)."""
    y, yh = _resolved(y_true, y_pred)
    if y.size == 0:
        return UNDEFINED
    return float(np.mean(np.sign(y) == np.sign(yh)))


def wald_test_vs_one(samples):
    """Wald statistic ``(mean - 1) / (std / sqrt(n))`` with a two-sided normal p-value."""
    x = np.asarray(samples, dtype=float)
    x = x[np.isfinite(x)]
    if x.size < 2:
        return UNDEFINED, UNDEFINED
    sd = x.std(ddof=1)
    if not sd > 0:
        return UNDEFINED, UNDEFINED
    w = (x.mean() - 1.0) / (sd / math.sqrt(x.size))
    return float(w), float(2.0 * stats.norm.sf(abs(w)))


def welch_from_moments(mean_a, var_a, n_a, mean_b, var_b, n_b, equal_var=False):
    """Two-sample t statistic and two-sided p-value from summary moments.

    Welch's unequal-variance form with Welch-Satterthwaite degrees of freedom
    by default; ``equal_var`` switches to the pooled-variance test.
    """
    if n_a < 2 or n_b < 2:
        return UNDEFINED, UNDEFINED
    if equal_var:
        dof = n_a + n_b - 2
        pooled = ((n_a - 1) * var_a + (n_b - 1) * var_b) / dof
        se2 = pooled * (1.0 / n_a + 1.0 / n_b)
    else:
        va, vb = var_a / n_a, var_b / n_b
        se2 = va + vb
        if se2 > 0:
            dof = se2 * se2 / (va * va / (n_a - 1) + vb * vb / (n_b - 1))
    if not se2 > 0:
        if mean_a == mean_b:
            return 0.0, 1.0
        return UNDEFINED, UNDEFINED
    t = (mean_a - mean_b) / math.sqrt(se2)
    return float(t), float(2.0 * stats.t.sf(abs(t), dof))


def two_sample_t_test(samples_a, samples_b, equal_var=False):
    a = np.asarray(samples_a, dtype=float)
    b = np.asarray(samples_b, dtype=float)
    a, b = a[np.isfinite(a)], b[np.isfinite(b)]
    if a.size < 2 or b.size < 2:
        return UNDEFINED, UNDEFINED
    return welch_from_moments(a.mean(), a.var(ddof=1), a.size, b.mean(), b.var(ddof=1), b.size,
                              equal_var)


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


@dataclass
class CellMetrics:
    model: str
    target: str
    horizon: int
    count: int
    mse: float
    nmse: float
    accuracy: float
    status: str = "ok"


@dataclass
class EvaluationReport:
    cells: list = field(default_factory=list)
    models: list = field(default_factory=list)
    summary_nmse: dict = field(default_factory=dict)
    summary_accuracy: dict = field(default_factory=dict)
    by_horizon: list = field(default_factory=list)
    pairwise: list = field(default_factory=list)

    def cell(self, model, target, horizon):
        for c in self.cells:
            if (c.model, c.target, c.horizon) == (model, target, horizon):
                return c
        raise KeyError((model, target, horizon))

    def nmse_samples(self, model):
        return np.array([c.nmse for c in self.cells if c.model == model], dtype=float)


def _describe(values, n_targets):
    x = np.asarray(values, dtype=float)
    x = x[np.isfinite(x)]
    out = {"targets": n_targets, "count": int(x.size)}
    if x.size == 0:
        for k in ("mean", "std", "min", "25%", "50%", "75%", "max", "se"):
            out[k] = UNDEFINED
        return out
    q = np.quantile(x, [0.25, 0.5, 0.75])
    sd = float(x.std(ddof=1)) if x.size > 1 else UNDEFINED
    out.update({"mean": float(x.mean()), "std": sd, "min": float(x.min()), "25%": float(q[0]),
                "50%": float(q[1]), "75%": float(q[2]), "max": float(x.max()),
                "se": sd / math.sqrt(x.size) if x.size > 1 else UNDEFINED})
    return out


def evaluate(cells, models=None, baseline="rw"):
    """Score forecast cells against the random-walk cell of the same (target, horizon).

    ``cells`` must include the baseline for every (target, horizon). ``models``
    restricts (and orders) the models reported; the default is every model
    found, in first-seen order.
    """
    if models is None:
        models = list(dict.fromkeys(c.model_id for c in cells))
    base = {(c.target_id, c.horizon): c for c in cells if c.model_id == baseline}
    report = EvaluationReport(models=list(models))
    for c in cells:
        if c.model_id not in models:
            continue
        if c.error:
            report.cells.append(CellMetrics(c.model_id, c.target_id, c.horizon, 0, UNDEFINED,
                                            UNDEFINED, UNDEFINED, "failed"))
            continue
        ref = base.get((c.target_id, c.horizon))
        m = mse(c.y_realized, c.y_hat)
        acc = accuracy(c.y_realized, c.y_hat)
        nm = UNDEFINED
        status = "ok"
        if ref is None or ref.error:
            status = "no-baseline"
        else:
            _, ia, ib = np.intersect1d(c.t, ref.t, assume_unique=True, return_indices=True)
            keep = (np.isfinite(c.y_hat[ia]) & np.isfinite(ref.y_hat[ib])
                    & np.isfinite(c.y_realized[ia]))
            if keep.any():
                nm = nmse(mse(c.y_realized[ia][keep], c.y_hat[ia][keep]),
                          mse(ref.y_realized[ib][keep], ref.y_hat[ib][keep]))
        if math.isnan(m) or math.isnan(nm):
            status = status if status != "ok" else "undefined"
        count = int(np.isfinite(c.y_realized).sum())
        report.cells.append(CellMetrics(c.model_id, c.target_id, c.horizon, count, m, nm, acc,
                                        status))
    report.cells.sort(key=lambda r: (models.index(r.model), r.target, r.horizon))

    for model in models:
        rows = [r for r in report.cells if r.model == model]
        n_targets = len({r.target for r in rows})
        s = _describe([r.nmse for r in rows], n_targets)
        w, p = wald_test_vs_one([r.nmse for r in rows])
        s["t-value"], s["p-value"] = w, p
        s["reject-5%"] = UNDEFINED if math.isnan(p) else int(p < SIGNIFICANCE)
        report.summary_nmse[model] = s
        report.summary_accuracy[model] = _describe([r.accuracy for r in rows], n_targets)
        for h in sorted({r.horizon for r in rows}):
            vals = np.array([r.nmse for r in rows if r.horizon == h])
            vals = vals[np.isfinite(vals)]
            report.by_horizon.append((model, h, float(vals.mean()) if vals.size else UNDEFINED))

    for a, b in itertools.combinations(models, 2):
        t, p = two_sample_t_test(report.nmse_samples(a), report.nmse_samples(b))
        report.pairwise.append((a, b, t, p))
    return report


def fmt(x):
    """Six significant digits; NaN renders as ``NA``."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if x is None or math.isnan(x):
        return "NA"
    return f"{x:.6g}"


def _write(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


REPORT_FILES = ("summary_nmse.csv", "summary_accuracy.csv", "nmse_by_horizon.csv",
                "pairwise_tests.csv", "cells.csv")


def emit_report(report, out_dir):
    """Write the summary tables, per-horizon curve, pairwise tests and per-cell metrics."""
    os.makedirs(out_dir, exist_ok=True)
    if not report.cells:
        logger.warning("empty evaluation report; writing headers only")
    models = [m for m in report.models if m in report.summary_nmse]
    _write(os.path.join(out_dir, "summary_nmse.csv"), ["stat", *models],
           [[row, *(fmt(report.summary_nmse[m][row]) for m in models)]
            for row in SUMMARY_NMSE_ROWS] if models else [])
    _write(os.path.join(out_dir, "summary_accuracy.csv"), ["stat", *models],
           [[row, *(fmt(report.summary_accuracy[m][row]) for m in models)]
            for row in SUMMARY_ACC_ROWS] if models else [])
    _write(os.path.join(out_dir, "nmse_by_horizon.csv"), ["model", "horizon", "mean_nmse"],
           [[m, str(h), fmt(v)] for m, h, v in report.by_horizon])
    _write(os.path.join(out_dir, "pairwise_tests.csv"),
           ["model_a", "model_b", "t_statistic", "p_value", "reject_5pct"],
           [[a, b, fmt(t), fmt(p), "NA" if math.isnan(p) else str(int(p < SIGNIFICANCE))]
            for a, b, t, p in report.pairwise])
    _write(os.path.join(out_dir, "cells.csv"),
           ["model", "target", "horizon", "count", "mse", "nmse", "accuracy", "status"],
           [[c.model, c.target, str(c.horizon), str(c.count), fmt(c.mse), fmt(c.nmse),
             fmt(c.accuracy), c.status] for c in report.cells])
    return [os.path.join(out_dir, f) for f in REPORT_FILES]
