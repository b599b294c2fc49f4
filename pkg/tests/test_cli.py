import csv
import json

import pytest

from edr_pav.cli import main
from edr_pav.datagen import save_matrix

FAST = ["--n", "15", "--p", "25", "--reps", "2", "--grid-count", "30"]


def test_simulate_writes_csv(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert main(["simulate", *FAST, "--seed", "4", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert [r[0] for r in rows[1:]] == ["pav", "cv5", "cv10"]
    assert "mean_error" in capsys.readouterr().out


def test_simulate_is_byte_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["simulate", *FAST, "--seed", "9", "--out", str(a)])
    main(["simulate", *FAST, "--seed", "9", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_seed_env_fallback(tmp_path, monkeypatch):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    monkeypatch.setenv("EDR_PAV_SEED", "9")
    main(["simulate", *FAST, "--out", str(a)])
    main(["simulate", *FAST, "--seed", "9", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_config_file_and_cv_method(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n = 15\np = 25\nreps = 2\ngrid-count = 30\nmethods = pav,cv\nk-folds = 3\n")
    out = tmp_path / "r.json"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    assert '"cv3"' in out.read_text()


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("colour = blue\n")
    assert main(["simulate", "--config", str(cfg)]) == 1
    assert "colour" in capsys.readouterr().err


def test_usage_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--bogus"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        main([])


def test_bad_method_exit_1(capsys):
    assert main(["simulate", *FAST, "--methods", "lasso"]) == 1
    assert "error" in capsys.readouterr().err


def test_loo_on_file(tmp_path, rng):
    data = tmp_path / "d.csv"
    X = rng.normal(size=(26, 40))
    save_matrix(data, X, X[:, :3].sum(axis=1) + rng.normal(size=26))
    out = tmp_path / "loo.json"
    assert main(["loo", "--data", str(data), "--grid-count", "30", "--methods", "pav,cv5", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert len(rep["predictions"]["pav"]) == 26
    assert main(["fit", "--data", str(data), "--grid-count", "30", "--methods", "pav"]) == 0


def test_fit_needs_data(capsys):
    assert main(["fit"]) == 1


def test_missing_file_exit_1(tmp_path):
    assert main(["fit", "--data", str(tmp_path / "nope.csv")]) == 1


def test_bench_reports_timings(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bench", *FAST, "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert float(rows[1][4]) == 1.0 and rows[2][3] != ""
