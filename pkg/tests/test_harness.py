import json
import subprocess
import sys

import numpy as np
import pytest

from kinetic_ergo import fit_rate, run_experiment, talagrand_harnack_audit
from kinetic_ergo.errors import ConfigError, EstimatorInputError
from kinetic_ergo.gaussian import (GaussianLaw, LinearModel, invariant_law,
                                   kl_gaussian, transition_law, w2_gaussian)
from kinetic_ergo.harness import ExperimentConfig, load_schema


def test_fit_rate_exact_exponential():
    t = np.arange(11.0)
    v = 3.0 * np.exp(-0.7 * t)
    fit = fit_rate(t, v)
    assert fit.lambda_hat == pytest.approx(0.7, rel=1e-12)
    assert fit.residual_rms == pytest.approx(0.0, abs=1e-12)


def test_fit_rate_constant_series():
    t = np.arange(10.0)
    fit = fit_rate(t, np.full(10, 2.5))
    assert fit.lambda_hat == pytest.approx(0.0, abs=1e-12)


def test_fit_rate_insufficient_points():
    with pytest.raises(EstimatorInputError):
        fit_rate([0.0, 1.0, 2.0], [1.0, 0.5, 0.2])


def test_fit_rate_window_and_floor():
    t = np.linspace(0, 10, 21)
    v = np.exp(-0.5 * t) + 0.0
    fit = fit_rate(t, v, window=(2.0, 8.0))
    assert fit.t_lo >= 2.0 and fit.t_hi <= 8.0
    with pytest.raises(EstimatorInputError):
        fit_rate(t, v, window=(8.0, 2.0))


def test_fit_rate_oracle_w2_curve():
    # d=1 linear model: fitted rate within 5% of the spectral abscissa 1/2
    model = LinearModel.from_kinetic(np.eye(1), 1.0, 2 * np.eye(1))
    mubar = invariant_law(model)
    nu0 = GaussianLaw(mean=[3.0, 0.0], cov=np.eye(2))
    t = np.linspace(0, 15, 31)
    w2 = np.array([w2_gaussian(transition_law(model, nu0, s), mubar) for s in t])
    fit = fit_rate(t, w2, noise_floor=0.03)
    assert fit.lambda_hat == pytest.approx(0.5, rel=0.05)


def d1_model():
    return LinearModel.from_kinetic(np.eye(1), 1.0, 2 * np.eye(1))


def test_audit_identical_laws():
    model = d1_model()
    mubar = invariant_law(model)
    # square-root cancellation leaves ~1e-8 noise in the Gaussian W2
    assert w2_gaussian(mubar, mubar) == pytest.approx(0.0, abs=1e-7)
    assert kl_gaussian(mubar, mubar) == pytest.approx(0.0, abs=1e-12)


def test_audit_no_violations_and_stable_c1():
    rep = talagrand_harnack_audit(d1_model(), t_probe=1.0, n_probes=100,
                                  n_sets=3, seed=0)
    assert rep.violations == 0
    assert rep.worst_slack >= 0
    assert all(np.isfinite(c) and c > 0 for c in rep.c1_values)
    assert rep.c1_spread <= 0.10


BASE_CONFIG = {
    "pipeline": "dissipativity",
    "seed": 0,
    "model": {"d": 1, "linear_position": [[1.0]], "friction": 1.0},
    "diffusion": {"sigma": [[1.4142135623730951]]},
    "dissipativity": {
        "trials": 20000,
        "cert": {"theta": 0.25, "r": 1.0, "r0": 0.5, "R": 1.0},
    },
}


def test_config_schema_validation():
    cfg = ExperimentConfig.from_dict(BASE_CONFIG)
    assert cfg.pipeline == "dissipativity"
    bad = dict(BASE_CONFIG, pipeline="nonsense")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(bad)
    empty_n = dict(BASE_CONFIG, pipeline="chaos-scan", meanfield={"N_list": []})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(empty_n)


def test_config_bad_file(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(p)


def test_run_dissipativity_pass(tmp_path):
    raw = dict(BASE_CONFIG, out=str(tmp_path / "out"))
    cfg = ExperimentConfig.from_dict(raw)
    summary = run_experiment(cfg)
    assert summary["passed"]
    assert (tmp_path / "out" / "summary.json").exists()
    assert (tmp_path / "out" / "plots" / "dissipativity.svg").exists()
    on_disk = json.loads((tmp_path / "out" / "summary.json").read_text())
    import jsonschema
    jsonschema.validate(on_disk, load_schema("summary.schema.json"))


def test_run_dissipativity_falsified(tmp_path):
    raw = dict(BASE_CONFIG, out=str(tmp_path / "out"))
    raw = json.loads(json.dumps(raw))
    raw["model"]["linear_position"] = [[-1.0]]
    raw["model"]["friction"] = 0.1
    cfg = ExperimentConfig.from_dict(raw)
    summary = run_experiment(cfg)
    assert not summary["passed"]
    assert "witness" in summary["details"]


def test_run_experiment_reproducible_csv(tmp_path):
    outs = []
    for sub in ("a", "b"):
        raw = dict(BASE_CONFIG, out=str(tmp_path / sub))
        summary = run_experiment(ExperimentConfig.from_dict(raw))
        outs.append((tmp_path / sub / "data" / "dissipativity.csv").read_bytes())
    assert outs[0] == outs[1]


def write_config(tmp_path, raw):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(raw))
    return p


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "kinetic_ergo.cli", *args],
                          capture_output=True, text=True)


def test_cli_pass_and_exit_codes(tmp_path):
    p = write_config(tmp_path, dict(BASE_CONFIG, out=str(tmp_path / "out")))
    res = run_cli("dissipativity", "--config", str(p))
    assert res.returncode == 0, res.stderr
    assert "PASS" in res.stdout


def test_cli_alias_check_dissipativity(tmp_path):
    p = write_config(tmp_path, dict(BASE_CONFIG, out=str(tmp_path / "out")))
    res = run_cli("check-dissipativity", "--config", str(p))
    assert res.returncode == 0, res.stderr


def test_cli_input_error_exit_3(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text("{broken")
    res = run_cli("dissipativity", "--config", str(p))
    assert res.returncode == 3


def test_cli_pipeline_mismatch_exit_3(tmp_path):
    p = write_config(tmp_path, dict(BASE_CONFIG, out=str(tmp_path / "out")))
    res = run_cli("hypo-verify", "--config", str(p))
    assert res.returncode == 3


def test_cli_acceptance_failure_exit_2(tmp_path):
    raw = json.loads(json.dumps(dict(BASE_CONFIG, out=str(tmp_path / "out"))))
    raw["model"]["linear_position"] = [[-1.0]]
    raw["model"]["friction"] = 0.1
    p = write_config(tmp_path, raw)
    res = run_cli("dissipativity", "--config", str(p))
    assert res.returncode == 2


def test_cli_mv_fixed_point(tmp_path):
    raw = {
        "pipeline": "ergodicity-mv",
        "seed": 0,
        "out": str(tmp_path / "out"),
        "model": {"d": 1, "linear_position": [[1.0]], "friction": 1.0,
                  "interaction": {"name": "linear_attraction",
                                  "params": {"kappa": 0.05}}},
        "diffusion": {"sigma": [[1.4142135623730951]]},
        "integrator": {"dt": 0.01},
        "meanfield": {"n_inner": 512, "tol": 0.08, "max_iter": 8, "relax_T": 10.0},
    }
    p = write_config(tmp_path, raw)
    res = run_cli("mv-fixed-point", "--config", str(p))
    assert res.returncode == 0, res.stderr
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["passed"]
    assert (tmp_path / "out" / "data" / "fixed_point_gaps.csv").exists()
