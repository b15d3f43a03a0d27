"""Forecast records and per-cell forecast arrays."""
import math
from dataclasses import dataclass

import numpy as np

from .errors import ProtocolError

LOG_HEADER = ("target", "model", "horizon", "t", "y_hat", "y_realized")


@dataclass(slots=True)
class ForecastRecord:
    target_id: str
    model_id: str
    horizon: int
    t: int
    y_hat: float
    y_realized: float = math.nan

    @property
    def resolved(self):
        return not math.isnan(self.y_realized)

    def resolve(self, y):
        if self.resolved:
            raise ProtocolError(f"record t={self.t} h={self.horizon} already resolved")
        self.y_realized = float(y)


@dataclass
class CellForecasts:
    """All forecasts of one (target, model, horizon) cell as aligned arrays.

    ``t[i]`` is the return-row index at which ``y_hat[i]`` was issued;
    ``y_realized[i]`` is the target return at ``t[i] + horizon``.
    """

    target_id: str
    model_id: str
    horizon: int
    t: np.ndarray
    y_hat: np.ndarray
    y_realized: np.ndarray
    error: str = ""

    def __len__(self):
        return len(self.t)

    def records(self):
        for t, yh, yr in zip(self.t, self.y_hat, self.y_realized):
            yield ForecastRecord(self.target_id, self.model_id, self.horizon, int(t),
                                 float(yh), float(yr))

    @classmethod
    def from_records(cls, records):
        records = list(records)
        if not records:
            raise ProtocolError("cannot build a cell from zero records")
        first = records[0]
        return cls(first.target_id, first.model_id, first.horizon,
                   np.array([r.t for r in records], dtype=np.int64),
                   np.array([r.y_hat for r in records], dtype=float),
                   np.array([r.y_realized for r in records], dtype=float))

    @classmethod
    def failed(cls, target_id, model_id, horizon, error):
        empty = np.empty(0)
        return cls(target_id, model_id, horizon, np.empty(0, dtype=np.int64), empty,
                   empty.copy(), error)


def _fmt(x):
    return "" if math.isnan(x) else repr(float(x))


def write_log(cells, path):
    """Write forecasts as ``target,model,horizon,t,y_hat,y_realized`` CSV rows."""
    with open(path, "w") as fh:
        fh.write(",".join(LOG_HEADER) + "\n")
        for c in cells:
            prefix = f"{c.target_id},{c.model_id},{c.horizon},"
            fh.writelines(
                f"{prefix}{int(t)},{_fmt(yh)},{_fmt(yr)}\n"
                for t, yh, yr in zip(c.t, c.y_hat, c.y_realized)
            )


def read_log(path):
    """Inverse of :func:`write_log`; returns cells in first-seen order."""
    groups = {}
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != LOG_HEADER:
            raise ProtocolError(f"{path}: unexpected forecast log header {header}")
        for line in fh:
            target, model, h, t, yh, yr = line.rstrip("\n").split(",")
            key = (target, model, int(h))
            groups.setdefault(key, ([], [], []))
            ts, yhs, yrs = groups[key]
            ts.append(int(t))
            yhs.append(float(yh) if yh else math.nan)
            yrs.append(float(yr) if yr else math.nan)
    return [
        CellForecasts(k[0], k[1], k[2], np.array(v[0], dtype=np.int64), np.array(v[1]),
                      np.array(v[2]))
        for k, v in groups.items()
    ]
