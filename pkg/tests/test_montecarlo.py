import json
import math
from pathlib import Path

import numpy as np
import pytest

import experiments.montecarlo.engine as engine
from bivou.asymptotics import asym_cov
from bivou.core import Params
from bivou.errors import DomainError, EstimationError, ExperimentError, SampleIOError
from experiments.common import scenarios as SC
from experiments.common.stats import DEFAULT_PROBS, N01_REFERENCE_ROW, normal_quantiles, normality_screen
from experiments.montecarlo.engine import (
    ExperimentSpec,
    consistency_sweep,
    csv_header,
    load_experiment_config,
    merge_tables,
    run_experiment,
    run_experiments,
    table_summary,
    write_table_csv,
)

DOCS = Path(__file__).resolve().parent.parent / "docs"
PSI_T1 = Params.of(1.0, 1.0, 0.0, 15.0)
PSI_T3 = Params.of(0.5, 0.5, 0.0, 15.0)


def _spec(**kw) -> ExperimentSpec:
    base = {"psi0": PSI_T1, "n": 60, "m": 8, "scenario": "theta_rho", "master_seed": 7}
    return ExperimentSpec(**{**base, **kw})


# ============================================================================
# Specs
# ============================================================================

def test_practical_range_sets_theta():
    spec = ExperimentSpec(psi0={"sigma1_sq": 1, "sigma2_sq": 1, "rho": 0, "practical_range": 0.2},
                          n=200, m=10, scenario="theta_rho")
    assert spec.psi0.theta == pytest.approx(15.0)
    assert spec.quantile_probs == DEFAULT_PROBS
    assert spec.grid_policy == "redraw"


@pytest.mark.parametrize("bad", [
    {"m": 0},
    {"m": 100_001},
    {"n": 1},
    {"master_seed": -1},
    {"scenario": "custom"},
    {"grid_policy": "sometimes"},
    {"quantile_probs": (0.5, 0.25)},
    {"quantile_probs": (0.0, 0.5)},
    {"first_replication": -3},
    {"psi0": {"sigma1_sq": 1, "sigma2_sq": 1, "rho": 0, "theta": 15, "practical_range": 0.2}},
    {"psi0": {"sigma1_sq": 1, "sigma2_sq": 1, "rho": 0, "practical_range": 0}},
])
def test_invalid_specs(bad):
    with pytest.raises(DomainError):
        _spec(**bad)


# ============================================================================
# Aggregation
# ============================================================================

def test_single_replication_collapses_quantiles():
    table = run_experiment(_spec(m=1), workers=1)
    for row in table.rows:
        assert len(set(row.quantiles)) == 1
        assert row.variance == 0.0
        assert row.replications == 1
        assert row.quantiles[0] == pytest.approx(row.mean_standardized)


def test_rows_follow_scenario_labels():
    table = run_experiment(_spec(scenario="full", psi0=PSI_T3), workers=1)
    assert [r.statistic for r in table.rows] == ["sigma1_sq_theta", "sigma2_sq_theta", "rho"]
    for r in table.rows:
        assert r.quantiles == sorted(r.quantiles)
        assert r.variance >= 0.0
        assert r.replications + r.failures == 8


def test_worker_count_does_not_change_results():
    spec = _spec(m=12)
    one = run_experiment(spec, workers=1)
    four = run_experiment(spec, workers=4)
    assert one.model_dump() == four.model_dump()
    assert one.samples == four.samples


@pytest.mark.slow
def test_sixteen_workers_match_one():
    spec = _spec(m=64, n=200)
    assert run_experiment(spec, workers=1).model_dump() == run_experiment(spec, workers=16).model_dump()


def test_frozen_grid_policy_is_deterministic():
    spec = _spec(grid_policy="frozen")
    a, b = run_experiment(spec, workers=1), run_experiment(spec, workers=1)
    assert a.model_dump() == b.model_dump()
    assert a.model_dump() != run_experiment(_spec(), workers=1).model_dump()


def test_half_batches_merge_into_full_batch():
    full = run_experiment(_spec(m=10), workers=1)
    first = run_experiment(_spec(m=5), workers=1)
    second = run_experiment(_spec(m=5, first_replication=5), workers=1)
    merged = merge_tables(first, second)
    assert merged.model_dump() == full.model_dump()
    assert merged.samples == full.samples


def test_run_experiments_keeps_distinct_cells():
    table = run_experiments([_spec(n=40), _spec(n=50)], workers=1)
    assert [(r.n, r.statistic) for r in table.rows] == [(40, "theta"), (40, "rho"), (50, "theta"), (50, "rho")]
    assert table.row("rho", n=50).n == 50
    with pytest.raises(KeyError):
        table.row("rho", n=70)


# ============================================================================
# Failures
# ============================================================================

def test_occasional_failures_are_excluded_and_counted(monkeypatch):
    real_fit = engine.fit_mle
    calls = {"n": 0}

    def flaky(sample, box=None, options=None):
        calls["n"] += 1
        if calls["n"] == 1:
            raise EstimationError("forced")
        return real_fit(sample, box, options)

    monkeypatch.setattr(engine, "fit_mle", flaky)
    table = run_experiment(_spec(m=40, n=40), workers=1)
    for row in table.rows:
        assert row.failures == 1
        assert row.replications == 39


def test_too_many_failures_raise(monkeypatch):
    def broken(sample, box=None, options=None):
        raise EstimationError("forced")

    monkeypatch.setattr(engine, "fit_mle", broken)
    with pytest.raises(ExperimentError) as exc:
        run_experiment(_spec(m=20), workers=1)
    ctx = exc.value.context
    assert ctx["failures"] == 20
    assert len(ctx["errors"]) == 5
    assert ctx["errors"][0].startswith("#0: estimation")


# ============================================================================
# Config files and outputs
# ============================================================================

def test_load_grouped_config(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps({
        "name": "demo",
        "description": "two sizes",
        "scenario": "theta_rho",
        "m": 50,
        "psi0": {"sigma1_sq": 1, "sigma2_sq": 1, "rho": 0.2, "practical_range": 0.4},
        "experiments": [{"n": 100}, {"n": 200, "label": "big"}],
    }))
    name, specs = load_experiment_config(path)
    assert name == "demo"
    assert [s.n for s in specs] == [100, 200]
    assert specs[1].label == "big"
    assert specs[0].psi0.theta == pytest.approx(7.5)
    # overriding n makes both entries identical
    _, collapsed = load_experiment_config(path, n=300, m=4, master_seed=1)
    assert len(collapsed) == 1
    assert (collapsed[0].n, collapsed[0].m, collapsed[0].master_seed) == (300, 4, 1)


def test_load_single_spec(tmp_path):
    path = tmp_path / "one.json"
    path.write_text(json.dumps({"psi0": PSI_T1.model_dump(), "n": 20, "m": 3, "scenario": "full"}))
    name, specs = load_experiment_config(path)
    assert name == "one"
    assert len(specs) == 1 and specs[0].scenario == "full"


def test_shipped_configs_load():
    _, t1 = load_experiment_config(DOCS / "table1.json")
    assert [(s.n, s.m, s.scenario) for s in t1] == [(200, 1000, "theta_rho"), (500, 1000, "theta_rho")]
    assert t1[0].psi0.theta == pytest.approx(15.0)
    _, t3 = load_experiment_config(DOCS / "table3.json")
    assert [s.n for s in t3] == [500, 1000]
    assert t3[0].psi0.sigma1_sq == 0.5


@pytest.mark.parametrize("body,error", [
    (None, SampleIOError),
    ("{not json", SampleIOError),
    ("[1, 2]", DomainError),
    ('{"n": 10, "m": 2, "scenario": "full"}', DomainError),
])
def test_bad_configs(tmp_path, body, error):
    path = tmp_path / "cfg.json"
    if body is not None:
        path.write_text(body)
    with pytest.raises(error):
        load_experiment_config(path)


def test_csv_and_summary_schema(tmp_path):
    table = run_experiment(_spec(m=3), workers=1)
    path = write_table_csv(table, tmp_path / "t.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == ("n,theta0,practical_range,rho0,sigma1_sq0,sigma2_sq0,scenario,statistic,"
                        "q5,q25,q50,q75,q95,variance,replications,failures")
    assert len(lines) == 1 + len(table.rows)
    doc = table_summary(table, {"run": "x"})
    assert set(doc) == {"meta", "rows", "reference"}
    assert doc["reference"]["quantiles"] == list(N01_REFERENCE_ROW)
    assert "samples" not in json.loads(table.model_dump_json())
    assert set(doc["rows"][0]) == {
        "n", "theta0", "practical_range", "rho0", "sigma1_sq0", "sigma2_sq0", "scenario", "statistic",
        "probs", "quantiles", "variance", "mean_standardized", "replications", "failures",
    }


def test_custom_probs_reference_row():
    probs = (0.1, 0.5, 0.9)
    table = run_experiment(_spec(m=3, quantile_probs=probs), workers=1)
    assert csv_header(probs)[8:11] == ["q10", "q50", "q90"]
    ref = table_summary(table, {})["reference"]["quantiles"]
    np.testing.assert_allclose(ref, normal_quantiles(probs), atol=1e-4)


# ============================================================================
# Statistical behaviour
# ============================================================================

def test_full_scenario_rho_is_close_to_standard_normal():
    spec = ExperimentSpec(psi0=PSI_T3, n=200, m=300, scenario="full", master_seed=3)
    table = run_experiment(spec)
    row = table.row("rho")
    assert max(abs(a - b) for a, b in zip(row.quantiles, N01_REFERENCE_ROW)) < 0.35
    target = asym_cov("full", PSI_T3).array[2, 2] / spec.n
    assert 0.6 < row.variance / target < 1.5


def _assert_matches_published(row, published, var_tol=0.25, q_tol=0.15):
    assert max(abs(a - b) for a, b in zip(row.quantiles, published[:5])) < q_tol
    assert abs(row.variance - published[5]) / published[5] < var_tol


@pytest.mark.slow
def test_table1_row():
    spec = ExperimentSpec(psi0=PSI_T1, n=500, m=1000, scenario="theta_rho")
    row = run_experiment(spec, workers=8).row("rho")
    _assert_matches_published(row, SC.TABLE1.lookup(500, 0.2, 0.0))


@pytest.mark.slow
def test_table3_row():
    spec = ExperimentSpec(psi0=PSI_T3, n=1000, m=1000, scenario="full")
    table = run_experiment(spec, workers=8)
    _assert_matches_published(table.row("sigma1_sq_theta"), SC.TABLE3.lookup(1000, 0.2, 0.0))
    for key, values in table.samples.items():
        assert normality_screen(values["standardized"], seed=1).passed, key


@pytest.mark.slow
def test_consistency_sweep():
    report = consistency_sweep(Params.of(1.0, 1.0, 0.5, 15.0), [100, 400, 1600], m=200, workers=8)
    for label in engine.MICROERGODIC_LABELS:
        assert report.strictly_decreasing(label), label
    assert all(1.5 <= r <= 2.7 for r in report.ratios("rho"))


def test_consistency_sweep_rejects_unsorted_sizes():
    with pytest.raises(DomainError):
        consistency_sweep(PSI_T1, [400, 100], m=2)


def test_consistency_report_shape():
    report = consistency_sweep(PSI_T3, [40, 80], m=4, workers=1)
    assert [p.n for p in report.points] == [40, 80]
    assert set(report.points[0].median_abs_error) == set(engine.MICROERGODIC_LABELS)
    assert len(report.ratios("rho")) == 1
    assert all(math.isfinite(p.theta_sd) for p in report.points)
    summary = report.points[0].theta_summary
    assert set(summary) == {"n", "mean", "median", "sd", "min", "max"}
    assert summary["n"] == report.points[0].replications
    assert summary["sd"] == pytest.approx(report.points[0].theta_sd)
