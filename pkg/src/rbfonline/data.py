"""Price panels, returns, train/test splitting and synthetic generators."""
import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, InputFormatError, ValidationError

logger = logging.getLogger(__name__)

SYNTH_START = np.datetime64("2018-11-01")


@dataclass(frozen=True)
class PricePanel:
    """Daily price levels, one column per instrument; NaN marks a missing cell."""

    timestamps: np.ndarray
    instruments: tuple
    prices: np.ndarray

    def __post_init__(self):
        problems = panel_problems(self.timestamps, self.instruments, self.prices)
        if problems:
            raise ValidationError(problems[0])

    @property
    def n_rows(self):
        return self.prices.shape[0]


@dataclass(frozen=True)
class ReturnSeries:
    timestamps: np.ndarray
    instruments: tuple
    values: np.ndarray

    @property
    def n_rows(self):
        return self.values.shape[0]

    def column(self, instrument):
        return self.values[:, self.instruments.index(instrument)]


@dataclass(frozen=True)
class SplitSpec:
    """Chronological train/test split; ``rounding`` is ``floor`` or ``ceil``."""

    train_fraction: float = 0.5
    rounding: str = "floor"

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.rounding not in ("floor", "ceil"):
            raise ConfigError(f"rounding must be 'floor' or 'ceil', got {self.rounding!r}")

    def boundary_index(self, n_rows):
        raw = self.train_fraction * n_rows
        return math.floor(raw) if self.rounding == "floor" else math.ceil(raw)


def panel_problems(timestamps, instruments, prices):
    """Return every invariant violation of a price panel as a message list."""
    problems = []
    prices = np.asarray(prices)
    if prices.ndim != 2:
        return [f"prices must be 2-D, got shape {prices.shape}"]
    if prices.shape != (len(timestamps), len(instruments)):
        return [
            f"prices shape {prices.shape} does not match "
            f"{len(timestamps)} timestamps x {len(instruments)} instruments"
        ]
    if len(set(instruments)) != len(instruments):
        problems.append("duplicate instrument identifiers")
    ts = np.asarray(timestamps)
    if ts.size > 1:
        steps = np.diff(ts)
        for r in np.flatnonzero(steps == np.timedelta64(0)):
            problems.append(f"duplicate timestamp {ts[r + 1]} at row {r + 2}")
        inversions = np.flatnonzero(steps < np.timedelta64(0))
        if inversions.size:
            r = inversions[0]
            problems.append(
                f"timestamps not increasing: {ts[r + 1]} at row {r + 2} follows {ts[r]}"
            )
    bad = np.argwhere(~np.isnan(prices) & ~(prices > 0))
    for r, c in bad:
        problems.append(f"non-positive price {prices[r, c]} at row {r + 1}, column {instruments[c]!r}")
    return problems


def _parse_rows(path):
    """Parse a price CSV into (timestamps, instruments, prices) without invariant checks."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputFormatError(f"{path}: empty file") from None
        if len(header) < 2:
            raise InputFormatError(f"{path}: header needs a date column and at least one instrument")
        instruments = tuple(h.strip() for h in header[1:])
        stamps, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise InputFormatError(
                    f"{path}: line {lineno} has {len(row)} fields, expected {len(header)}"
                )
            try:
                stamps.append(np.datetime64(row[0].strip(), "D"))
            except ValueError:
                raise InputFormatError(
                    f"{path}: line {lineno}, column {header[0]!r}: unparseable date {row[0]!r}"
                ) from None
            values = []
            for name, cell in zip(instruments, row[1:]):
                cell = cell.strip()
                if not cell:
                    values.append(np.nan)
                    continue
                try:
                    values.append(float(cell))
                except ValueError:
                    raise InputFormatError(
                        f"{path}: line {lineno}, column {name!r}: unparseable number {cell!r}"
                    ) from None
            rows.append(values)
    prices = np.array(rows, dtype=float).reshape(len(rows), len(instruments))
    return np.array(stamps, dtype="datetime64[D]"), instruments, prices


def check_csv(path):
    """List every problem in a price CSV; an empty list means the file is valid."""
    try:
        timestamps, instruments, prices = _parse_rows(path)
    except InputFormatError as exc:
        return [str(exc)]
    problems = panel_problems(timestamps, instruments, prices)
    if prices.shape[0] == 0:
        problems.append("no data rows")
    return problems


def load_csv(path, columns=None):
    """Load a ``date,<instrument>...`` CSV into a :class:`PricePanel`.

    ``columns`` optionally restricts (and orders) the instruments kept.
    """
    timestamps, instruments, prices = _parse_rows(path)
    if columns is not None:
        missing = [c for c in columns if c not in instruments]
        if missing:
            raise InputFormatError(f"{path}: columns not found: {missing}")
        idx = [instruments.index(c) for c in columns]
        instruments, prices = tuple(columns), prices[:, idx]
    problems = panel_problems(timestamps, instruments, prices)
    if problems:
        raise ValidationError(f"{path}: {problems[0]}")
    return PricePanel(timestamps, instruments, prices)


def write_csv(panel, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", *panel.instruments])
        for ts, row in zip(panel.timestamps, panel.prices):
            writer.writerow([str(ts)] + ["" if np.isnan(v) else repr(float(v)) for v in row])


def compute_returns(panel, kind="log"):
    """Per-period returns; a row is NaN wherever either adjacent price is missing."""
    if panel.n_rows < 2:
        raise ValidationError("need at least 2 price rows to form returns")
    p = panel.prices
    prev, cur = p[:-1], p[1:]
    if kind == "log":
        with np.errstate(invalid="ignore", divide="ignore"):
            if np.any((p <= 0) & ~np.isnan(p)):
                raise DomainError("log returns need strictly positive prices")
            values = np.log(cur / prev)
    elif kind == "simple":
        values = cur / prev - 1.0
    else:
        raise ConfigError(f"return kind must be 'log' or 'simple', got {kind!r}")
    return ReturnSeries(panel.timestamps[1:], panel.instruments, values)


def split(series, spec=SplitSpec()):
    """Chronological split into (train, test) at ``spec.boundary_index``."""
    n = series.n_rows
    if n < 4:
        raise ValidationError(f"split needs at least 4 rows, got {n}")
    b = spec.boundary_index(n)
    b = min(max(b, 1), n - 1)
    head = ReturnSeries(series.timestamps[:b], series.instruments, series.values[:b])
    tail = ReturnSeries(series.timestamps[b:], series.instruments, series.values[b:])
    return head, tail


# ---------------------------------------------------------------------------
# synthetic generators
# ---------------------------------------------------------------------------


def _panel_from_log_increments(increments, names, p0=100.0):
    n_steps, _ = increments.shape
    log_p = np.vstack([np.zeros((1, increments.shape[1])), np.cumsum(increments, axis=0)])
    stamps = SYNTH_START + np.arange(n_steps + 1).astype("timedelta64[D]")
    return PricePanel(stamps, tuple(names), p0 * np.exp(log_p))


def _names(n_instruments, prefix="s"):
    width = len(str(n_instruments - 1))
    return [f"{prefix}{i:0{width}d}" for i in range(n_instruments)]


def synthesize_jump_diffusion(n, seed, drift=0.0, vol=0.01, jump_intensity=0.0,
                              jump_scale=0.05, n_instruments=1, p0=100.0):
    """Independent jump-diffusion price paths with ``n`` rows each.

    Log-price increments are N(drift, vol^2), plus an independent N(0, jump_scale^2)
    jump with probability ``jump_intensity`` per step.
    """
    if n < 2:
        raise ConfigError(f"n must be >= 2, got {n}")
    if not vol > 0:
        raise ConfigError(f"vol must be > 0, got {vol}")
    if not 0.0 <= jump_intensity <= 1.0:
        raise ConfigError(f"jump_intensity must lie in [0, 1], got {jump_intensity}")
    if n_instruments < 1:
        raise ConfigError("n_instruments must be >= 1")
    rng = np.random.default_rng(seed)
    shape = (n - 1, n_instruments)
    inc = drift + vol * rng.standard_normal(shape)
    jumps = rng.random(shape) < jump_intensity
    inc += np.where(jumps, jump_scale * rng.standard_normal(shape), 0.0)
    return _panel_from_log_increments(inc, _names(n_instruments), p0)


def synthesize_ar1(n, seed, coef=0.6, vol=0.01, n_instruments=10, p0=100.0):
    """Prices whose log returns follow independent stationary AR(1) processes."""
    if n < 3:
        raise ConfigError(f"n must be >= 3, got {n}")
    if not -1.0 < coef < 1.0:
        raise ConfigError(f"AR coefficient must lie in (-1, 1), got {coef}")
    rng = np.random.default_rng(seed)
    eps = vol * rng.standard_normal((n - 1, n_instruments))
    r = np.empty_like(eps)
    r[0] = eps[0] / math.sqrt(1.0 - coef * coef)
    for t in range(1, n - 1):
        r[t] = coef * r[t - 1] + eps[t]
    return _panel_from_log_increments(r, _names(n_instruments), p0)


def synthesize_coefficient_flip(n, seed, flip_at=None, beta=1.0, vol=0.01, noise=0.002,
                                n_distractors=2, p0=100.0):
    """A driver ``x`` and target ``y`` with ``y_t = b_t * x_{t-1} + noise``.

    ``b_t`` equals ``beta`` for return rows before ``flip_at`` and ``-beta`` from
    ``flip_at`` on (``None`` keeps it constant). Distractor columns are pure noise.
    """
    if n < 3:
        raise ConfigError(f"n must be >= 3, got {n}")
    rng = np.random.default_rng(seed)
    m = n - 1
    x = vol * rng.standard_normal(m)
    b = np.full(m, beta)
    if flip_at is not None:
        b[flip_at:] = -beta
    y = noise * rng.standard_normal(m)
    y[1:] += b[1:] * x[:-1]
    cols = [x, y] + [vol * rng.standard_normal(m) for _ in range(n_distractors)]
    names = ["x", "y"] + [f"z{i}" for i in range(n_distractors)]
    return _panel_from_log_increments(np.column_stack(cols), names, p0)
