from __future__ import annotations

import csv
import json
import subprocess
import sys

import pytest

from latentdx.cli import main, prediction_targets
from latentdx.config import parse_config
from latentdx.model import MISSING, REFERENCE_VALUES, SubjectRecord

FREE = ("beta1", "beta5", "sigma_eps2")


def base_config(**extra):
    raw = {
        "seed": 5,
        "model": {"fixed": {k: v for k, v in REFERENCE_VALUES.items() if k not in FREE}},
        "parameters": dict(REFERENCE_VALUES),
        "integrator": {"target_error": 1e-3},
        "optimizer": {"max_iter": 30},
        "simulation": {"n_subjects": 40, "visit_offsets": [0, 1, 3, 5, 8]},
        "prediction": {"history_years": 5},
    }
    raw.update(extra)
    return raw


def write_config(path, raw):
    path.write_text(json.dumps(raw))
    return str(path)


def run(*args):
    return main([str(a) for a in args])


def outputs(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = write_config(root / "config.json", base_config())
    sim = root / "sim"
    assert run("simulate", "--config", cfg, "--out-dir", sim) == 0
    fitted = root / "fit"
    assert run("fit", "--config", cfg, "--out-dir", fitted, "--data", sim / "cohort.csv") == 0
    return root, cfg, sim, fitted


def test_simulate_outputs(workspace):
    _, _, sim, _ = workspace
    assert sorted(outputs(sim)) == ["cohort.csv", "simulation.json", "truth.csv"]
    report = json.loads((sim / "simulation.json").read_text())
    assert report["n_subjects"] == 40 and report["seed"] == 5 and len(report["config_hash"]) == 64


def test_fit_report(workspace):
    _, _, _, fitted = workspace
    report = json.loads((fitted / "fit_report.json").read_text())
    assert report["converged"] and report["iterations"] <= 30
    assert [p["name"] for p in report["parameters"]] == list(FREE)
    with open(fitted / "parameters.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["parameter"] for r in rows] == list(FREE)
    assert all(float(r["std_error"]) > 0 for r in rows)


def test_predict_and_histogram(workspace):
    root, cfg, sim, fitted = workspace
    out = root / "pred"
    args = ("--config", cfg, "--data", sim / "cohort.csv", "--params", fitted / "fit_report.json")
    assert run("predict", *args, "--out-dir", out) == 0
    report = json.loads((out / "prediction.json").read_text())
    lo, hi = report["interval"]
    assert lo <= report["expected_count"] <= hi
    with open(out / "predictions.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == report["n_subjects"]
    assert all(0.0 <= float(r["p"]) <= 1.0 for r in rows)
    assert run("histogram", *args, "--out-dir", out) == 0
    with open(out / "histogram.csv") as fh:
        hist = list(csv.DictReader(fh))
    assert len(hist) == 31
    assert sum(int(r["observed"]) for r in hist) == pytest.approx(
        sum(float(r["expected"]) for r in hist), abs=1e-9)


def test_reruns_are_byte_identical(workspace, tmp_path):
    root, cfg, sim, fitted = workspace
    data = ("--data", sim / "cohort.csv")
    assert run("simulate", "--config", cfg, "--out-dir", tmp_path / "sim") == 0
    assert outputs(tmp_path / "sim") == outputs(sim)
    assert run("fit", "--config", cfg, "--out-dir", tmp_path / "fit", *data) == 0
    assert outputs(tmp_path / "fit") == outputs(fitted)
    for cmd in ("predict", "histogram"):
        a, b = tmp_path / f"{cmd}_a", tmp_path / f"{cmd}_b"
        for out in (a, b):
            assert run(cmd, "--config", cfg, "--out-dir", out, *data) == 0
        assert outputs(a) == outputs(b)


def test_threads_do_not_change_results(workspace, tmp_path):
    _, cfg, sim, fitted = workspace
    assert run("fit", "--config", cfg, "--out-dir", tmp_path, "--data", sim / "cohort.csv",
               "--threads", 2) == 0
    assert outputs(tmp_path) == outputs(fitted)


def test_seed_flag_overrides(workspace, tmp_path):
    _, cfg, sim, _ = workspace
    assert run("simulate", "--config", cfg, "--out-dir", tmp_path, "--seed", 6) == 0
    assert (tmp_path / "cohort.csv").read_bytes() != (sim / "cohort.csv").read_bytes()
    assert json.loads((tmp_path / "simulation.json").read_text())["seed"] == 6


def test_all_educated(tmp_path):
    raw = base_config()
    raw["simulation"]["education_prob"] = 1.0
    cfg = write_config(tmp_path / "c.json", raw)
    assert run("simulate", "--config", cfg, "--out-dir", tmp_path) == 0
    with open(tmp_path / "cohort.csv") as fh:
        assert {r["ed"] for r in csv.DictReader(fh)} == {"1"}


def test_invalid_config_exits_2(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", base_config(integrator={"target_eror": 1e-3}))
    assert run("simulate", "--config", cfg, "--out-dir", tmp_path) == 2
    assert "target_eror" in capsys.readouterr().err


def test_missing_data_exits_2(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", base_config())
    assert run("fit", "--config", cfg, "--out-dir", tmp_path, "--data", tmp_path / "none.csv") == 2


def test_bad_cohort_line_exits_2(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", base_config())
    data = tmp_path / "d.csv"
    data.write_text("subject_id,visit_time,test,value,ed\na,0,mmse,99,0\n")
    assert run("fit", "--config", cfg, "--out-dir", tmp_path, "--data", data) == 2
    assert "d.csv:2:" in capsys.readouterr().err


def test_unidentifiable_model_exits_2(workspace, tmp_path, capsys):
    _, _, sim, _ = workspace
    raw = base_config()
    raw["model"] = {"tests": [
        {"name": "dementia", "kind": "binary", "n_categories": 2, "cutoff": {"type": "threshold"},
         "random_effect": True},
        {"name": "mmse", "kind": "ordinal", "n_categories": 31,
         "cutoff": {"type": "power_grid", "fixed_top": None}, "error_term": True,
         "terms": ["ed", "pra", "ed:pra"]},
    ]}
    raw["parameters"]["eta4"] = 40.0
    cfg = write_config(tmp_path / "c.json", raw)
    assert run("fit", "--config", cfg, "--out-dir", tmp_path, "--data", sim / "cohort.csv") == 2
    assert "cut-offs:" in capsys.readouterr().err
    assert not (tmp_path / "fit_report.json").exists()


def test_nonconvergence_exits_3(workspace, tmp_path):
    _, _, sim, _ = workspace
    cfg = write_config(tmp_path / "c.json", base_config(optimizer={"max_iter": 0}))
    assert run("fit", "--config", cfg, "--out-dir", tmp_path, "--data", sim / "cohort.csv") == 3
    assert json.loads((tmp_path / "fit_report.json").read_text())["converged"] is False


def test_bad_threads_exits_2(tmp_path):
    cfg = write_config(tmp_path / "c.json", base_config())
    assert run("simulate", "--config", cfg, "--out-dir", tmp_path, "--threads", 0) == 2


def test_prediction_rule():
    cfg = parse_config(base_config())

    def subj(sid, times, dx):
        return SubjectRecord(sid, times, [dx, [MISSING] * len(times)])

    cohort = [
        subj("a", [1.0, 2.0, 4.0, 6.0, 9.0], [0, 0, 0, 0, 1]),  # target 9, outcome 1
        subj("b", [1.0, 3.0, 9.0], [0, 1, 1]),                   # diagnosed in history
        subj("c", [1.0, 2.0], [0, 0]),                           # nothing after the history
        subj("d", [1.0, 7.0], [0, MISSING]),                     # target 7, outcome unknown
    ]
    histories, targets, outcomes = prediction_targets(cfg, cohort)
    assert [h.id for h in histories] == ["a", "d"]
    assert targets == {"a": 9.0, "d": 7.0}
    assert outcomes == {"a": 1, "d": None}
    assert histories[0].visit_times.tolist() == [1.0, 2.0, 4.0, 6.0]


def test_prediction_rule_with_horizon():
    cfg = parse_config(base_config(prediction={"history_years": 2, "horizon_years": 5}))
    cohort = [SubjectRecord("a", [1.0, 2.0, 6.0], [[0, 0, 0], [MISSING] * 3])]
    histories, targets, outcomes = prediction_targets(cfg, cohort)
    assert targets == {"a": 6.0} and outcomes == {"a": 0}


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "latentdx", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "simulate" in res.stdout
