import json
import subprocess
import sys

import numpy as np
import pytest

from rbfonline.cli import main
from rbfonline.data import compute_returns, load_csv
from rbfonline.evaluation import REPORT_FILES

SMALL = ["--set", "synth.kind=ar1", "--set", "synth.n=300", "--set", "synth.instruments=3",
         "--set", "horizons=1,5"]


def test_run_writes_all_artifacts(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["run", *SMALL, "--set", "models=rw,rbfnet", "--out", str(out), "--seed", "3"])
    assert code == 0
    for name in REPORT_FILES:
        assert (out / "report" / name).exists()
    for name in ("forecasts.csv", "feature_selection.tsv", "effective_config.cfg",
                 "manifest.json"):
        assert (out / name).exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 3 and manifest["failed_cells"] == 0
    assert "seed = 3" in (out / "effective_config.cfg").read_text()
    header = (out / "report" / "summary_nmse.csv").read_text().splitlines()[0]
    assert header == "stat,rw,rbfnet"
    horizons = {ln.split(",")[1] for ln in (out / "report" / "nmse_by_horizon.csv").read_text().splitlines()[1:]}
    assert horizons == {"1", "5"}
    assert "rbfnet: mean nmse" in capsys.readouterr().out


def test_run_is_reproducible_from_its_manifest(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", *SMALL, "--set", "models=rw,ridge,ewrls", "--out", str(a)]) == 0
    assert main(["run", "--config", str(a / "effective_config.cfg"), "--out", str(b)]) == 0
    for name in REPORT_FILES:
        assert (a / "report" / name).read_bytes() == (b / "report" / name).read_bytes()
    assert (a / "forecasts.csv").read_bytes() == (b / "forecasts.csv").read_bytes()


def test_run_missing_data_file(tmp_path, capsys):
    code = main(["run", "--set", f"data.path={tmp_path / 'nope.csv'}", "--out", str(tmp_path)])
    assert code == 2
    assert "nope.csv" in capsys.readouterr().err


def test_config_errors_exit_one(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("seed = 1\newrls.tau = 2\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert main(["run", "--set", "nonsense.key=1", "--out", str(tmp_path)]) == 1
    assert "nonsense.key" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


def test_synth_then_run_on_csv(tmp_path):
    csv_path = tmp_path / "panel.csv"
    assert main(["synth", "--out", str(csv_path), "--set", "synth.n=200",
                 "--set", "synth.instruments=3"]) == 0
    assert main(["validate", str(csv_path)]) == 0
    out = tmp_path / "run"
    assert main(["run", "--set", f"data.path={csv_path}", "--set", "horizons=1",
                 "--out", str(out)]) == 0
    assert (out / "report" / "cells.csv").read_text().count("\n") == 1 + 4 * 3


def test_synth_default_shape_and_bytes(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["synth", "--out", str(a), "--seed", "7"]) == 0
    assert main(["synth", "--out", str(b), "--seed", "7"]) == 0
    assert a.read_bytes() == b.read_bytes()
    panel = load_csv(a)
    assert panel.n_rows == 1297 and len(panel.instruments) == 10


def test_synth_jumps_are_visible(tmp_path):
    path = tmp_path / "j.csv"
    assert main(["synth", "--out", str(path), "--seed", "7", "--set", "synth.jump_intensity=0.05",
                 "--set", "synth.vol=0.01"]) == 0
    r = compute_returns(load_csv(path)).values
    assert np.abs(r).max() > 4 * 0.01


def test_validate_reports_problems(tmp_path, capsys):
    neg = tmp_path / "neg.csv"
    neg.write_text("date,a,b\n2020-01-01,1,2\n2020-01-02,3,-4\n")
    assert main(["validate", str(neg)]) == 2
    assert "row 2, column 'b'" in capsys.readouterr().out
    unordered = tmp_path / "u.csv"
    unordered.write_text("date,a\n2020-01-01,1\n2020-01-03,1\n2020-01-02,1\n2020-01-01,1\n")
    assert main(["validate", str(unordered)]) == 2
    out = capsys.readouterr().out
    assert "2020-01-02 at row 3 follows 2020-01-03" in out
    assert main(["validate", str(tmp_path / "missing.csv")]) == 2


def test_validate_leaves_file_untouched(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("date,a\n2020-01-01,1\n")
    before = path.read_bytes()
    main(["validate", str(path)])
    assert path.read_bytes() == before


def test_report_from_log(tmp_path):
    out = tmp_path / "run"
    assert main(["run", *SMALL, "--set", "models=rw,ewrls", "--out", str(out)]) == 0
    again = tmp_path / "again"
    assert main(["report", "--log", str(out / "forecasts.csv"), "--out", str(again),
                 "--models", "rw,ewrls"]) == 0
    for name in REPORT_FILES:
        assert (again / name).read_bytes() == (out / "report" / name).read_bytes()


def test_checkpoint_write_and_inspect(tmp_path, capsys):
    ck = tmp_path / "ck"
    assert main(["checkpoint", *SMALL, "--set", "models=rw,rbfnet,ridge", "--out", str(ck)]) == 0
    files = sorted(p.name for p in ck.iterdir())
    assert len(files) == 3 * 2 * 2
    capsys.readouterr()
    assert main(["checkpoint", "--inspect", str(ck / "s0__rbfnet__h5.json")]) == 0
    text = capsys.readouterr().out
    assert "kind: rbfnet" in text and "horizon: 5" in text and "prototypes: k=" in text
    assert main(["checkpoint"]) == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "rbfonline", "--help"], capture_output=True,
                         text=True)
    assert res.returncode == 0
    assert "synth" in res.stdout
