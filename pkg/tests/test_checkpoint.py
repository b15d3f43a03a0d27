import json

import numpy as np
import pytest

from rbfonline import checkpoint
from rbfonline.errors import ProtocolError
from rbfonline.estimators import ewrls_init, ewrls_run
from rbfonline.prototypes import fit_prototypes
from rbfonline.records import CellForecasts, ForecastRecord, read_log, write_log


def test_component_round_trips(tmp_path, rng):
    p = fit_prototypes(rng.standard_normal((100, 2)), 3)
    s = ewrls_init(3)
    ewrls_run(s, rng.standard_normal((30, 3)), rng.standard_normal(30))
    for obj in (p, s):
        path = tmp_path / "c.json"
        checkpoint.save(obj, path)
        back = checkpoint.load(path)
        assert type(back) is type(obj)
        assert back.to_dict() == obj.to_dict()


def test_rejects_foreign_documents():
    with pytest.raises(ProtocolError):
        checkpoint.loads(json.dumps({"format": "other"}))
    doc = json.loads(checkpoint.dumps(ewrls_init(2)))
    doc["version"] = 99
    with pytest.raises(ProtocolError, match="version"):
        checkpoint.loads(json.dumps(doc))
    doc["version"] = 1
    doc["kind"] = "gpr"
    with pytest.raises(ProtocolError, match="kind"):
        checkpoint.loads(json.dumps(doc))


def test_record_resolves_once():
    r = ForecastRecord("a", "rw", 1, 5, 0.1)
    assert not r.resolved
    r.resolve(0.2)
    with pytest.raises(ProtocolError):
        r.resolve(0.3)


def test_log_round_trip(tmp_path):
    cells = [
        CellForecasts("a", "rw", 2, np.array([3, 4]), np.array([0.1, np.nan]),
                      np.array([1 / 3, -2e-7])),
        CellForecasts("b", "ewrls", 1, np.array([3]), np.array([0.25]), np.array([0.5])),
    ]
    write_log(cells, tmp_path / "f.csv")
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "target,model,horizon,t,y_hat,y_realized"
    back = read_log(tmp_path / "f.csv")
    assert len(back) == 2
    for u, v in zip(cells, back):
        assert (u.target_id, u.model_id, u.horizon) == (v.target_id, v.model_id, v.horizon)
        np.testing.assert_array_equal(u.t, v.t)
        np.testing.assert_array_equal(u.y_hat, v.y_hat)
        np.testing.assert_array_equal(u.y_realized, v.y_realized)


def test_cell_from_records():
    recs = [ForecastRecord("a", "m", 1, t, 0.1 * t, 0.2 * t) for t in range(3)]
    c = CellForecasts.from_records(recs)
    assert list(c.records()) == recs
    with pytest.raises(ProtocolError):
        CellForecasts.from_records([])
