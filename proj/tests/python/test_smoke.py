import json
import math
from pathlib import Path

import pytest

import sdg

CONFIGS = Path(__file__).resolve().parents[2] / "configs"


def test_version_and_columns():
    assert sdg.__version__
    assert sdg.metrics_columns("rdcurve") == [
        "beta",
        "expected_distortion",
        "expected_penalty",
        "mutual_information",
    ]


def test_beta_schedule_endpoints():
    assert sdg.beta_schedule(0.7, 40, 40) == 0.7
    assert sdg.beta_schedule(1.0, 1, 100) == pytest.approx(0.1, rel=1e-15)
    with pytest.raises(ValueError):
        sdg.beta_schedule(1.0, 0, 10)


def test_sign_ba_single_domain_follows_the_gradient():
    out = sdg.sign_ba([[1.0, -2.0]], [0.0, 0.0], beta=100.0, gamma=1.0)
    assert out["prob_plus"][0] > 1 - 1e-10
    assert out["prob_plus"][1] < 1e-10
    assert out["g_plus"] == [1.0, 0.0]
    assert out["g_minus"] == [0.0, -2.0]
    assert len(out["max_disagreement"]) == 25


def test_discrete_ba_symmetric_instance_is_uniform():
    out = sdg.discrete_ba(
        candidates=[[1.0, 0.0], [-1.0, 0.0]],
        penalty=[0.5, 0.5],
        domain_grads=[[0.0, 0.0], [0.0, 0.0]],
        beta=1.0,
        gamma=0.5,
        iterations=50,
    )
    assert out["marginal"] == [0.5, 0.5]
    assert out["mutual_information"] == 0.0
    assert math.isclose(sum(out["conditionals"][0]), 1.0)


def test_rd_curve_is_monotone_and_convex():
    out = sdg.rd_curve(
        candidates=[[1.0, 1.0], [1.0, -1.0], [1.0, 0.0], [0.0, 0.0]],
        penalty=[1.0, 0.8, 0.1, 0.0],
        domain_grads=[[1.0, 1.0], [1.0, -1.0]],
        betas=[0.0, 0.5, 1.0, 2.0, 5.0],
        gamma=0.1,
    )
    assert len(out["points"]) == 5
    assert out["monotone"] and out["convex"]
    with pytest.raises(ValueError):
        sdg.rd_curve([[0.0], [1.0]], [0.0, 1.0], [[0.0]], betas=[1.0, 0.5], gamma=1.0)


def test_prop1_bound_holds():
    assert "quadratic" in sdg.registered_objectives()
    out = sdg.prop1("sinusoid_quadratic", bias_norm=1.0, steps=500, seeds=3)
    assert out["bound_satisfied"]
    assert len(out["per_seed_avg"]) == 3
    with pytest.raises(sdg.ConfigError):
        sdg.prop1("no_such_objective")


def test_run_command_writes_outputs(tmp_path):
    code, err = sdg.run_command("rdcurve", CONFIGS / "rdcurve_demo.toml", tmp_path / "rd")
    assert code == 0, err
    summary = json.loads((tmp_path / "rd" / "summary.json").read_text())
    assert summary["results"]["monotone"] is True
    assert summary["manifest"]["command"] == "rdcurve"
    lines = (tmp_path / "rd" / "metrics.csv").read_text().splitlines()
    assert lines[0] == ",".join(sdg.metrics_columns("rdcurve"))
    assert len(lines) == 11

    code, err = sdg.run_command("rdcurve", CONFIGS / "rdcurve_demo.toml", tmp_path / "rd")
    assert code == 4
    assert "--overwrite" in err


def test_run_command_config_errors(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[train]\nlearning_rate = -1.0\n")
    code, err = sdg.run_command("train", bad, tmp_path / "out")
    assert code == 2
    assert "train.learning_rate" in err
