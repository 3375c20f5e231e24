import json
import math
import os
import pathlib
import subprocess

import jsonschema
import pytest

REPO = pathlib.Path(os.environ.get("FAIRPOS_REPO", pathlib.Path(__file__).resolve().parents[2]))
CLI = os.environ.get("FAIRPOS_CLI")
DATA = REPO / "data" / "synthetic_10arm.csv"
SCHEMA = json.loads((REPO / "docs" / "report.schema.json").read_text())
COVARIATES = ["x1", "x2", "x3"]


def run_cli(*args):
    return subprocess.run([CLI, *args], capture_output=True, text=True)


@pytest.mark.skipif(not CLI, reason="FAIRPOS_CLI not set")
def test_cli_report_matches_schema(tmp_path):
    out = tmp_path / "out"
    proc = run_cli("analyze", "--input", str(DATA), "--treatment", "provider", "--outcome", "readmit",
                   "--covariates", ",".join(COVARIATES), "--seed", "11", "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    report = json.loads((out / "report.json").read_text())
    jsonschema.validate(report, SCHEMA)
    assert [f["tag"] for f in report["families"]] == ["tsm", "multiplicative", "multiplicative", "exp_tilt",
                                                       "exp_tilt"]
    for family in report["families"]:
        assert len(family["estimates"]) == 10
        assert len(family["contrasts"]) == 9
    assert (out / "report.txt").exists()
    assert (out / "plot_tsm.csv").exists()


@pytest.mark.skipif(not CLI, reason="FAIRPOS_CLI not set")
def test_cli_experiment_report_matches_schema(tmp_path):
    proc = run_cli("experiment", "--name", "fairness", "--out", str(tmp_path))
    assert proc.returncode == 0, proc.stderr
    report = json.loads((tmp_path / "fairness.json").read_text())
    jsonschema.validate(report, SCHEMA)
    assert report["pass"] is True


@pytest.mark.skipif(not CLI, reason="FAIRPOS_CLI not set")
def test_cli_error_exit_code(tmp_path):
    proc = run_cli("analyze", "--input", str(DATA), "--treatment", "provider", "--outcome", "missing",
                   "--covariates", "x1", "--out", str(tmp_path))
    assert proc.returncode == 2


fairpos = pytest.importorskip("fairpos")


def test_shift_families():
    assert fairpos.shift("tsm", 0.0, 0.3) == 0.0
    assert fairpos.shift("multiplicative", 0.5, 0.4) == pytest.approx(0.2)
    assert fairpos.shift("exp_tilt", 0.5, 0.4) == pytest.approx(0.2 / 0.8)
    assert fairpos.smoothing(100.0, 0.0) == 0.0
    with pytest.raises(fairpos.FairposError):
        fairpos.shift("nope", 0.5, 0.1)


def test_interventional_propensity_rows():
    np = pytest.importorskip("numpy")
    pi = np.array([[0.2, 0.3, 0.5], [0.0, 0.4, 0.6]])
    out = fairpos.interventional_propensity(pi, "multiplicative", 0.5, 100.0, target=0)
    assert np.allclose(out["q"].sum(axis=1), 1.0)
    assert np.array_equal(out["q"][1], pi[1])
    assert out["trim_score"][1] == 0.0


def test_eif_mean_matches_functional():
    for process in fairpos.processes():
        psi = fairpos.true_functional(process, "exp_tilt", 0.5, 100.0, target=0)
        assert fairpos.eif_mean(process, "exp_tilt", 0.5, 100.0, target=0) == pytest.approx(psi, abs=1e-10)


def test_one_step_from_oracle_arrays():
    np = pytest.importorskip("numpy")
    rng = np.random.default_rng(3)
    n = 4000
    pi = np.tile([0.3, 0.7], (n, 1))
    a = (rng.uniform(size=n) < 0.7).astype(int)
    mu = np.tile([1.0, 2.0], (n, 1))
    y = mu[np.arange(n), a] + rng.normal(size=n)
    est = fairpos.one_step(a.tolist(), y.tolist(), pi, mu, "tsm", 0.0, 100.0)
    assert abs(est["psi"][0] - 1.0) < 4 * est["se"][0]
    assert abs(est["psi"][1] - 2.0) < 4 * est["se"][1]
    assert est["ci"].shape == (2, 2)


def test_analyze_deterministic():
    a = fairpos.analyze(str(DATA), "provider", "readmit", COVARIATES, seed=11)
    b = fairpos.analyze(str(DATA), "provider", "readmit", COVARIATES, seed=11, threads=2)
    a.pop("runtime_ms")
    b.pop("runtime_ms")
    assert a == b
    jsonschema.validate(a | {"runtime_ms": 0.0}, SCHEMA)
    assert all(math.isfinite(e["psi"]) for f in a["families"] for e in f["estimates"])


def test_library_checks():
    assert fairpos.necessity_check()["pass"]
    assert fairpos.fairness_check()["pass"]
    assert fairpos.telescoping(draws=200)["pass"]
