# tests/test_cli.py

import csv
import json

import pytest

import config
from cli.commands import load_config
from cli.schemas import RunConfig
from engine.errors import ConfigError
from main import main

BASE = {
    "N": 3,
    "lambda_multiple": 100.0,
    "resolution": 32,
    "vortices": [[{"point": [0.3, 0.4], "multiplicity": 1}], [], []],
    "appendix": {"samples": 100, "max_size": 6},
    "sweep": {"samples": 1},
}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(BASE))
    return path


def read_rows(path):
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


def test_schema_round_trip_and_hash():
    run = RunConfig.model_validate(BASE)
    assert run.counts() == [1, 0, 0]
    again = RunConfig.model_validate(json.loads(run.model_dump_json(by_alias=True)))
    assert again == run
    assert again.config_hash() == run.config_hash()
    assert RunConfig.model_validate({**BASE, "seed": 5}).config_hash() != run.config_hash()


@pytest.mark.parametrize("changes", [
    {"lambda": 10.0},
    {"lambda_multiple": None},
    {"vortices": [[], [], []]},
    {"vortices": [[{"point": [0.3, 0.4]}]]},
    {"vortices": [[{"point": [1.2, 0.4]}], [], []]},
    {"resolution": 48},
    {"background_mode": "smooth"},
])
def test_schema_rejects(changes):
    data = {k: v for k, v in {**BASE, **changes}.items() if v is not None}
    with pytest.raises(ValueError):
        RunConfig.model_validate(data)


def test_absolute_lambda_accepted():
    data = {k: v for k, v in BASE.items() if k != "lambda_multiple"}
    run = RunConfig.model_validate({**data, "lambda": 500.0})
    assert run.lambda_ == 500.0 and run.lambda_multiple is None


def test_lambda_override_replaces_absolute(tmp_path):
    data = {k: v for k, v in BASE.items() if k != "lambda_multiple"}
    path = tmp_path / "abs.json"
    path.write_text(json.dumps({**data, "lambda": 500.0}))
    run = load_config(path, {"lambda_multiple": 20.0, "seed": None})
    assert run.lambda_ is None and run.lambda_multiple == 20.0


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_missing_vortices_exit_code(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({k: v for k, v in BASE.items() if k != "vortices"}))
    assert main(["solve-min", "--config", str(path), "--out", str(tmp_path / "out")]) == config.EXIT_CONFIG_ERROR


def test_below_threshold_exit_code(config_path, tmp_path):
    code = main(["solve-min", "--config", str(config_path), "--lambda-multiple", "0.5",
                 "--out", str(tmp_path / "out")])
    assert code == config.EXIT_ADMISSIBILITY


def test_appendix_check_command(config_path, tmp_path, capsys):
    out = tmp_path / "appendix"
    assert main(["appendix-check", "--config", str(config_path), "--out", str(out)]) == config.EXIT_OK
    rows = read_rows(out / "appendix_check.csv")
    assert rows and all(row["status"] == "pass" for row in rows)
    assert "barrier_singular" in capsys.readouterr().out


def test_constraint_sweep_command(config_path, tmp_path):
    out = tmp_path / "sweep"
    code = main(["constraint-sweep", "--config", str(config_path), "--lambda-multiple", "20", "--out", str(out)])
    assert code == config.EXIT_OK
    rows = read_rows(out / "constraint_sweep.csv")
    assert len(rows) == 8
    assert sorted(row["pattern"] for row in rows) == sorted(f"{a}{b}{c}" for a in "01" for b in "01" for c in "01")
    assert all(float(row["jacobian_det"]) > 0 for row in rows)
    assert [row["matches_c_plus"] for row in rows if row["pattern"] == "111"] == ["True"]


def test_constraint_sweep_rank_limit(tmp_path):
    data = {**BASE, "N": 6, "vortices": [[{"point": [0.3, 0.4]}], [], [], [], [], []]}
    path = tmp_path / "big.json"
    path.write_text(json.dumps(data))
    assert main(["constraint-sweep", "--config", str(path), "--out", str(tmp_path)]) == config.EXIT_CONFIG_ERROR


def test_solve_min_then_verify(config_path, tmp_path):
    out = tmp_path / "min"
    assert main(["solve-min", "--config", str(config_path), "--out", str(out)]) == config.EXIT_OK
    report = json.loads((out / "report.json").read_text())
    assert report["minimum"]["label"] == "critical"
    assert report["minimum"]["branches"] == [1, 1, 1]
    assert report["config_hash"] == load_config(config_path).config_hash()
    assert sorted(p.name for p in (out / "fields").iterdir()) == ["v_0.csv", "v_1.csv", "v_2.csv"]
    assert read_rows(out / "convergence.csv")

    checked = tmp_path / "verify"
    code = main(["verify", "--config", str(config_path), "--out", str(checked), str(out / "fields")])
    assert code == config.EXIT_OK
    assert json.loads((checked / "report.json").read_text())["verify"]["label"] == "critical"


def test_verify_missing_fields(config_path, tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    code = main(["verify", "--config", str(config_path), "--out", str(tmp_path), str(empty)])
    assert code == config.EXIT_CONFIG_ERROR
