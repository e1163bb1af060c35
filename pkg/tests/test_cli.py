import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from main import main

DOCS = Path(__file__).resolve().parent.parent / "docs"
PSI_FLAGS = ["--sigma1-sq", "1", "--sigma2-sq", "1", "--rho", "0.5", "--theta", "15"]


def _simulate(path, n=100, seed=42, extra=()):
    return main(["simulate", "--n", str(n), *PSI_FLAGS, "--seed", str(seed), "--out", str(path), *extra])


def _last_error(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    return json.loads(err[-1])


# ============================================================================
# simulate
# ============================================================================

def test_simulate_writes_csv(tmp_path):
    out = tmp_path / "s.csv"
    assert _simulate(out) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "s,z1,z2"
    assert len(lines) == 101


def test_simulate_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    _simulate(a)
    _simulate(b)
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.csv"
    _simulate(c, seed=43)
    assert a.read_bytes() != c.read_bytes()


def test_simulate_meta(tmp_path):
    meta = tmp_path / "meta.json"
    assert _simulate(tmp_path / "s.csv", extra=["--meta", str(meta), "--grid", "equispaced"]) == 0
    doc = json.loads(meta.read_text())
    assert set(doc) == {"command", "output", "seed", "stream", "grid", "n", "method", "params"}
    assert doc["grid"] == "equispaced"
    assert doc["params"]["practical_range"] == pytest.approx(0.2)


def test_simulate_rejects_invalid_theta(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code = main(["simulate", "--n", "10", "--sigma1-sq", "1", "--sigma2-sq", "1", "--rho", "0",
                 "--theta", "0", "--out", str(out)])
    assert code == 2
    err = _last_error(capsys)
    assert err["error"] == "domain"
    assert "theta" in err["message"]
    assert not out.exists()


def test_simulate_accepts_practical_range(tmp_path):
    out = tmp_path / "s.csv"
    code = main(["simulate", "--n", "5", "--sigma1-sq", "1", "--sigma2-sq", "1", "--rho", "0",
                 "--practical-range", "0.2", "--out", str(out), "--method", "dense"])
    assert code == 0
    assert len(out.read_text().splitlines()) == 6


def test_simulate_requires_one_theta_form(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--n", "5", *PSI_FLAGS, "--practical-range", "0.2", "--out", str(tmp_path / "s.csv")])
    assert exc.value.code == 2


# ============================================================================
# fit
# ============================================================================

FIT_KEYS = {"psi_hat", "microergodic", "nll_at_min", "nll_at_start", "converged", "n_evals",
            "boundary_hit", "pinned", "profile_used", "grad_norm", "message", "scenario"}


def test_fit_recovers_microergodic_parameters(tmp_path, capsys):
    sample = tmp_path / "s.csv"
    n = 2000
    _simulate(sample, n=n, seed=5)
    capsys.readouterr()
    assert main(["fit", "--input", str(sample)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert set(doc) == {"meta", "fit"}
    assert set(doc["fit"]) == FIT_KEYS
    s1t, s2t, rho = doc["fit"]["microergodic"]
    se_st = math.sqrt(2) * 15.0 / math.sqrt(n)
    assert abs(s1t - 15.0) < 3 * se_st
    assert abs(s2t - 15.0) < 3 * se_st
    assert abs(rho - 0.5) < 3 * 0.75 / math.sqrt(n)


def test_fit_with_pins_frees_only_theta(tmp_path):
    sample = tmp_path / "s.csv"
    _simulate(sample, n=200)
    out = tmp_path / "fit.json"
    code = main(["fit", "--input", str(sample), "--pin", "rho=0", "--pin", "sigma1-sq=1",
                 "--pin", "sigma2_sq=1", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    fit = doc["fit"]
    assert fit["scenario"] == "theta_only"
    assert fit["pinned"] == ["sigma1_sq", "sigma2_sq", "rho"]
    assert (fit["psi_hat"]["sigma1_sq"], fit["psi_hat"]["sigma2_sq"], fit["psi_hat"]["rho"]) == (1.0, 1.0, 0.0)
    assert doc["meta"]["pinned"] == {"rho": 0.0, "sigma1_sq": 1.0, "sigma2_sq": 1.0}


def test_fit_missing_input(tmp_path, capsys):
    out = tmp_path / "fit.json"
    assert main(["fit", "--input", str(tmp_path / "none.csv"), "--out", str(out)]) == 4
    assert _last_error(capsys)["error"] == "io"
    assert not out.exists()


@pytest.mark.parametrize("pin", ["kappa=1", "rho", "theta=abc"])
def test_fit_bad_pin(tmp_path, capsys, pin):
    sample = tmp_path / "s.csv"
    _simulate(sample, n=20)
    assert main(["fit", "--input", str(sample), "--pin", pin]) == 2
    assert _last_error(capsys)["error"] == "domain"


# ============================================================================
# entropy / asymcov
# ============================================================================

def test_entropy_schema(capsys):
    code = main(["entropy", "--psi1", "1", "1", "0.5", "3", "--psi2", "2", "2", "0.5", "1.5", "--n", "200"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert set(doc) == {"meta", "entropy"}
    assert set(doc["entropy"]) == {"i_n", "n", "classification", "condition_residuals", "method"}
    assert doc["entropy"]["classification"] == "equivalent"
    assert doc["meta"]["grid"] == "equispaced"


def test_entropy_dense_matches_closed_form(capsys):
    args = ["entropy", "--psi1", "1", "1", "0.5", "3", "--psi2", "1", "1", "0.4", "3", "--n", "60"]
    main(args)
    fast = json.loads(capsys.readouterr().out)["entropy"]
    main(args + ["--dense"])
    dense = json.loads(capsys.readouterr().out)["entropy"]
    assert fast["classification"] == dense["classification"] == "orthogonal"
    assert fast["i_n"] == pytest.approx(dense["i_n"], rel=1e-6)
    assert dense["method"] == "dense"


def test_entropy_invalid_params(capsys):
    assert main(["entropy", "--psi1", "1", "1", "1.5", "3", "--psi2", "1", "1", "0", "3", "--n", "10"]) == 2


def test_asymcov_schema(capsys):
    code = main(["asymcov", "--scenario", "theta_rho", "--sigma1-sq", "1", "--sigma2-sq", "1",
                 "--rho", "0.5", "--theta", "15"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert set(doc) == {"meta", "asymcov"}
    assert doc["asymcov"]["labels"] == ["theta", "rho"]
    np.testing.assert_allclose(doc["asymcov"]["matrix"], [[281.25, 5.625], [5.625, 0.5625]])


# ============================================================================
# montecarlo
# ============================================================================

def _small_config(tmp_path):
    path = tmp_path / "mc.json"
    path.write_text(json.dumps({
        "name": "small",
        "scenario": "theta_rho",
        "m": 6,
        "master_seed": 5,
        "experiments": [
            {"psi0": {"sigma1_sq": 1, "sigma2_sq": 1, "rho": 0.2, "practical_range": 0.2}, "n": 40},
        ],
    }))
    return path


def test_montecarlo_worker_invariance(tmp_path):
    cfg = _small_config(tmp_path)
    one, two = tmp_path / "one.csv", tmp_path / "two.csv"
    assert main(["montecarlo", "--config", str(cfg), "--workers", "1", "--out-csv", str(one)]) == 0
    assert main(["montecarlo", "--config", str(cfg), "--workers", "2", "--out-csv", str(two)]) == 0
    assert one.read_bytes() == two.read_bytes()
    header = one.read_text().splitlines()[0]
    assert header.startswith("n,theta0,practical_range,rho0")


def test_montecarlo_json_summary(tmp_path, capsys):
    cfg = _small_config(tmp_path)
    assert main(["montecarlo", "--config", str(cfg), "--workers", "1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert set(doc) == {"meta", "rows", "reference"}
    assert doc["meta"]["name"] == "small"
    assert doc["meta"]["specs"][0]["master_seed"] == 5
    assert doc["reference"]["quantiles"] == [-1.6448, -0.6744, 0.0, 0.6744, 1.6448]
    assert [r["statistic"] for r in doc["rows"]] == ["theta", "rho"]


def test_montecarlo_quick_mode(tmp_path):
    out = tmp_path / "t1.json"
    t0 = time.perf_counter()
    code = main(["montecarlo", "--config", str(DOCS / "table1.json"), "--m", "10", "--n", "200",
                 "--workers", "1", "--out-json", str(out)])
    assert code == 0
    assert time.perf_counter() - t0 < 5.0
    doc = json.loads(out.read_text())
    assert {r["n"] for r in doc["rows"]} == {200}
    assert all(r["replications"] + r["failures"] == 10 for r in doc["rows"])


def test_montecarlo_missing_config(tmp_path, capsys):
    assert main(["montecarlo", "--config", str(tmp_path / "none.json")]) == 4
    assert _last_error(capsys)["error"] == "io"
