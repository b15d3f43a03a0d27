"""Experiment orchestration: data, per-target selection, model bank, prequential test.

Index conventions: ``R`` is the (T, N) return matrix and ``b`` the first test
row. A forecast issued at row ``t`` for horizon ``h`` uses returns at rows
``<= t`` and is scored against ``R[t + h, target]``. Training pairs satisfy
``t + h < b``; test forecasts are issued for ``b <= t < T - h``, so each
(target, model, horizon) cell holds ``(T - b) - h`` records.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import data as data_mod
from .config import ExperimentConfig
from .errors import ProtocolError, RbfOnlineError, SelectionError
from .evaluation import evaluate
from .featsel import FeatureSelection, select_features
from .rbfnet import LinearModel, RbfNetConfig, RbfNetModel
from .records import CellForecasts

logger = logging.getLogger(__name__)


def random_walk_forecast(history, h, mode="last_value"):
    """Forecast ``y_{t+h}`` as the last observed value of ``history`` (or zero)."""
    if h < 1:
        raise ProtocolError(f"horizon must be >= 1, got {h}")
    x = np.asarray(history, dtype=float)
    x = x[np.isfinite(x)]
    if x.size == 0:
        raise ProtocolError("random walk needs at least one observed value")
    return 0.0 if mode == "zero" else float(x[-1])


def _ffill(y):
    out = np.array(y, dtype=float)
    idx = np.where(np.isfinite(out), np.arange(out.size), -1)
    np.maximum.accumulate(idx, out=idx)
    filled = np.where(idx >= 0, out[np.maximum(idx, 0)], np.nan)
    return filled


def load_panel(cfg):
    if cfg.data.path:
        return data_mod.load_csv(cfg.data.path)
    s = cfg.synth
    if s.kind == "ar1":
        return data_mod.synthesize_ar1(s.n, s.seed, s.ar_coef, s.vol, s.instruments)
    if s.kind == "flip":
        return data_mod.synthesize_coefficient_flip(
            s.n, s.seed, flip_at=int(s.flip_fraction * (s.n - 1)), vol=s.vol,
            n_distractors=max(0, s.instruments - 2))
    return data_mod.synthesize_jump_diffusion(s.n, s.seed, s.drift, s.vol, s.jump_intensity,
                                              s.jump_scale, s.instruments)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    instruments: tuple
    targets: list
    boundary: int
    n_rows: int
    selections: dict
    cells: list
    report: object
    timings: dict = field(default_factory=dict)

    def cell(self, target, model, horizon):
        for c in self.cells:
            if (c.target_id, c.model_id, c.horizon) == (target, model, horizon):
                return c
        raise KeyError((target, model, horizon))


@dataclass
class _Prepared:
    R: np.ndarray
    names: tuple
    targets: list
    boundary: int
    selections: dict
    feature_idx: dict


def _candidates(names, j, include_own):
    return [i for i in range(len(names)) if include_own or i != j]


def _select_for_target(R, b, j, names, cfg):
    cand = _candidates(names, j, cfg.featsel.include_own)
    X = R[: b - 1][:, cand]
    y = R[1:b, j]
    ok = np.isfinite(y) & np.isfinite(X).all(axis=1)
    sel = select_features(X[ok], y[ok], cfg.featsel.max_features, cfg.featsel.min_r2_gain,
                          cfg.featsel.vif_threshold, names=[names[i] for i in cand],
                          target_id=names[j])
    return sel, [names.index(f) for f in sel.ordered_features]


def prepare(cfg, panel=None):
    """Load data, build returns, split and run feature selection for every target."""
    cfg.validate()
    panel = load_panel(cfg) if panel is None else panel
    returns = data_mod.compute_returns(panel, cfg.data.returns)
    spec = data_mod.SplitSpec(cfg.split.train_fraction, cfg.split.rounding)
    train, _ = data_mod.split(returns, spec)
    b = train.n_rows
    names = returns.instruments
    targets = list(cfg.data.targets) or list(names)
    unknown = [t for t in targets if t not in names]
    if unknown:
        raise RbfOnlineError(f"unknown targets {unknown}")
    selections, feature_idx = {}, {}
    for tgt in targets:
        j = names.index(tgt)
        try:
            selections[tgt], feature_idx[tgt] = _select_for_target(returns.values, b, j, names, cfg)
        except SelectionError as exc:
            logger.error("feature selection failed for %s: %s", tgt, exc)
            selections[tgt], feature_idx[tgt] = None, None
    return _Prepared(returns.values, names, targets, b, selections, feature_idx)


def _rbf_config(cfg):
    r = cfg.rbfnet
    return RbfNetConfig(k=r.k, seed=cfg.seed, max_iter=r.max_iter, tol=r.tol, decay=r.decay,
                        shrinkage=r.shrinkage, eps=r.eps,
                        min_cluster_size=r.min_cluster_size, tau=cfg.ewrls.tau,
                        delta=cfg.ewrls.delta, online_prototypes=r.online_prototypes)


def fit_model(model_id, prep, target, h, cfg):
    """Fit one model of the bank on the training segment."""
    j = prep.names.index(target)
    idx = prep.feature_idx[target]
    if idx is None:
        raise SelectionError(f"no feature selection available for {target}")
    R, b = prep.R, prep.boundary
    n_pairs = b - h
    if n_pairs < 1:
        raise RbfOnlineError(f"training segment too short for horizon {h}")
    X = R[:n_pairs][:, idx]
    y = R[h:b, j]
    sel = prep.selections[target]
    if model_id == "rbfnet":
        return RbfNetModel.fit_initial(_rbf_config(cfg), X, y, h, target, sel)
    if model_id == "ewrls":
        return LinearModel.fit_ewrls(X, y, h, target, sel, cfg.ewrls.tau, cfg.ewrls.delta)
    if model_id == "ridge":
        return LinearModel.fit_ridge(X, y, h, target, sel, cfg.ridge.lam)
    raise RbfOnlineError(f"model {model_id!r} has no fitted form")


def _test_layout(prep, target, h):
    R, b = prep.R, prep.boundary
    T = R.shape[0]
    j = prep.names.index(target)
    test_t = np.arange(b, T)
    labels = np.full(test_t.size, np.nan)
    keep = max(0, test_t.size - h)
    labels[:keep] = R[test_t[:keep] + h, j]
    return test_t, labels, keep


def run_cell(model_id, prep, target, h, cfg):
    test_t, labels, keep = _test_layout(prep, target, h)
    if model_id == "rw":
        y = prep.R[:, prep.names.index(target)]
        preds = np.zeros(test_t.size) if cfg.rw_mode == "zero" else _ffill(y)[test_t]
    else:
        model = fit_model(model_id, prep, target, h, cfg)
        idx = prep.feature_idx[target]
        preds = model.run_bulk(prep.R[test_t][:, idx], labels)
    return CellForecasts(target, model_id, h, test_t[:keep].astype(np.int64), preds[:keep],
                         labels[:keep])


def _safe_cell(args):
    model_id, prep, target, h, cfg = args
    try:
        return run_cell(model_id, prep, target, h, cfg)
    except (RbfOnlineError, np.linalg.LinAlgError, ValueError) as exc:
        logger.error("cell (%s, %s, h=%d) aborted: %s", target, model_id, h, exc)
        return CellForecasts.failed(target, model_id, h, f"{type(exc).__name__}: {exc}")


def run_experiment(cfg, panel=None):
    """Run the full train-then-prequential-test experiment described by ``cfg``.

    The random-walk baseline is always computed (it anchors nmse) even when
    ``rw`` is not among the reported models.
    """
    t0 = time.perf_counter()
    prep = prepare(cfg, panel)
    t1 = time.perf_counter()
    model_ids = ["rw"] + [m for m in cfg.models if m != "rw"]
    jobs = [(m, prep, tgt, h, cfg) for tgt in prep.targets for m in model_ids
            for h in cfg.horizons]
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            cells = list(pool.map(_safe_cell, jobs))
    else:
        cells = [_safe_cell(job) for job in jobs]
    t2 = time.perf_counter()
    report = evaluate(cells, models=list(cfg.models))
    t3 = time.perf_counter()
    return ExperimentResult(cfg, prep.names, prep.targets, prep.boundary, prep.R.shape[0],
                            prep.selections, cells, report,
                            {"prepare_s": t1 - t0, "cells_s": t2 - t1, "evaluate_s": t3 - t2})
