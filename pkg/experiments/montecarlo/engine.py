"""
Monte Carlo engine for the fixed-domain simulation study.

One replication = draw a grid, simulate exactly with the Markov recursion, fit
by maximum likelihood in the scenario's box, standardize. Replications are
independent tasks handed to a multiprocessing Pool; replication r draws its
grid from stream (0, r, 0) and its field from stream (0, r, 1) of the master
seed (a frozen grid comes from stream (1,)), and results are reduced in
replication order, so a table depends on the seed only, never on the number
of workers.

Raw per-replication values are kept on the table (excluded from JSON) so two
tables built from disjoint replication ranges merge into exactly the table a
single run over the union would give.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path
from typing import Dict, Iterable, List, Literal, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from bivou.asymptotics import SCENARIO_LABELS, Scenario, scenario_estimates, standardize
from bivou.core import PRACTICAL_RANGE_FACTOR, DomainModel, Params, SamplingGrid
from bivou.errors import BivouError, DomainError, ExperimentError, SampleIOError
from bivou.estimate import box_for_scenario, fit_mle
from bivou.simulate import SEED_MAX, SimConfig, make_rng, simulate_recursive
from config import config
from experiments.common.stats import (
    DEFAULT_PROBS,
    N01_REFERENCE_ROW,
    empirical_quantiles,
    median_abs_error,
    normal_quantiles,
    sample_variance,
    summarize_values,
)

MICROERGODIC_LABELS = ("sigma1_sq_theta", "sigma2_sq_theta", "rho")


# ===========================================================================
# Specs and results
# ===========================================================================
class ExperimentSpec(DomainModel):
    psi0: Params
    n: int
    m: int
    scenario: Scenario
    master_seed: int = Field(default_factory=lambda: config.SEED)
    grid_policy: Literal["redraw", "frozen"] = "redraw"
    quantile_probs: Tuple[float, ...] = DEFAULT_PROBS
    first_replication: int = 0
    label: str = ""

    @model_validator(mode="before")
    @classmethod
    def _practical_range(cls, data):
        # psi0 may give the practical range x instead of theta (theta = 3 / x)
        if isinstance(data, dict) and isinstance(data.get("psi0"), dict) and "practical_range" in data["psi0"]:
            p = dict(data["psi0"])
            x = p.pop("practical_range")
            if "theta" in p:
                raise ValueError("give either theta or practical_range for psi0, not both")
            p["theta"] = PRACTICAL_RANGE_FACTOR / float(x) if float(x) > 0 else float("nan")
            data = {**data, "psi0": p}
        return data

    @field_validator("n")
    @classmethod
    def _n(cls, v: int) -> int:
        if v < 2:
            raise ValueError(f"n must be >= 2 (got {v})")
        return v

    @field_validator("m")
    @classmethod
    def _m(cls, v: int) -> int:
        if not 1 <= v <= config.MAX_REPLICATIONS:
            raise ValueError(f"m must be in [1, {config.MAX_REPLICATIONS}] (got {v})")
        return v

    @field_validator("master_seed")
    @classmethod
    def _seed(cls, v: int) -> int:
        if not 0 <= v < SEED_MAX:
            raise ValueError(f"seed must be a 64-bit unsigned integer (got {v})")
        return v

    @field_validator("quantile_probs")
    @classmethod
    def _probs(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if not v or any(not 0.0 < p < 1.0 for p in v) or any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError(f"quantile probabilities must be strictly increasing in (0, 1) (got {v})")
        return v

    @field_validator("first_replication")
    @classmethod
    def _first(cls, v: int) -> int:
        if v < 0:
            raise ValueError(f"first_replication must be >= 0 (got {v})")
        return v

    def replication_indices(self) -> range:
        return range(self.first_replication, self.first_replication + self.m)


class QuantileRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    theta0: float
    practical_range: float
    rho0: float
    sigma1_sq0: float
    sigma2_sq0: float
    scenario: str
    statistic: str
    probs: Tuple[float, ...]
    quantiles: List[float]
    variance: float
    mean_standardized: float
    replications: int
    failures: int

    @property
    def key(self) -> str:
        return row_key(self.n, self.theta0, self.rho0, self.sigma1_sq0, self.sigma2_sq0,
                       self.scenario, self.statistic)


class QuantileTable(BaseModel):
    model_config = ConfigDict(frozen=True)

    rows: List[QuantileRow]
    # row key -> {"standardized": [...], "raw": [...]}, replication order
    samples: Dict[str, Dict[str, List[float]]] = Field(default_factory=dict, exclude=True, repr=False)

    def row(self, statistic: str, n: Optional[int] = None, rho0: Optional[float] = None) -> QuantileRow:
        for r in self.rows:
            if r.statistic == statistic and (n is None or r.n == n) and (rho0 is None or r.rho0 == rho0):
                return r
        raise KeyError(f"no row for statistic={statistic} n={n} rho0={rho0}")


def row_key(n, theta0, rho0, s1, s2, scenario, statistic) -> str:
    return f"{n}|{theta0!r}|{rho0!r}|{s1!r}|{s2!r}|{scenario}|{statistic}"


def _build_row(template: Dict, standardized: Sequence[float], raw: Sequence[float], failures: int) -> QuantileRow:
    z = np.asarray(standardized, dtype=float)
    return QuantileRow(
        **template,
        quantiles=empirical_quantiles(z, template["probs"]),
        variance=sample_variance(raw),
        mean_standardized=float(z.mean()) if z.size else math.nan,
        replications=int(z.size),
        failures=failures,
    )


# ===========================================================================
# One replication
# ===========================================================================
@dataclass
class Replication:
    index: int
    ok: bool
    estimates: List[float] = field(default_factory=list)
    standardized: List[float] = field(default_factory=list)
    psi_hat: List[float] = field(default_factory=list)
    microergodic: List[float] = field(default_factory=list)
    error: str = ""


def frozen_grid(spec: ExperimentSpec) -> SamplingGrid:
    return SamplingGrid.uniform(spec.n, make_rng(spec.master_seed, (1,)))


def replicate(task: Tuple[ExperimentSpec, int, Optional[SamplingGrid]]) -> Replication:
    """simulate -> fit -> standardize for replication index r. Top level so Pool can pickle it."""
    spec, r, grid = task
    try:
        if grid is None:
            grid = SamplingGrid.uniform(spec.n, make_rng(spec.master_seed, (0, r, 0)))
        sample = simulate_recursive(SimConfig(params=spec.psi0, grid=grid,
                                              seed=spec.master_seed, stream=(0, r, 1)))
        fit = fit_mle(sample, box_for_scenario(spec.scenario, spec.psi0))
    except BivouError as exc:
        return Replication(index=r, ok=False, error=f"{exc.kind}: {exc.message}")
    if not fit.converged:
        return Replication(index=r, ok=False,
                           error=f"not converged (grad_norm={fit.grad_norm:.3g}): {fit.message}")
    return Replication(
        index=r,
        ok=True,
        estimates=scenario_estimates(fit, spec.scenario).tolist(),
        standardized=standardize(fit, spec.psi0, spec.scenario, spec.n).tolist(),
        psi_hat=fit.psi_hat.to_vector().tolist(),
        microergodic=list(fit.microergodic),
    )


def run_replications(spec: ExperimentSpec, workers: Optional[int] = None) -> List[Replication]:
    workers = max(1, int(workers if workers is not None else config.WORKERS))
    grid = frozen_grid(spec) if spec.grid_policy == "frozen" else None
    tasks = [(spec, r, grid) for r in spec.replication_indices()]
    logger.info(f"▶️  {spec.scenario} n={spec.n} m={spec.m} psi0=({spec.psi0.sigma1_sq:g}, "
                f"{spec.psi0.sigma2_sq:g}, {spec.psi0.rho:g}, {spec.psi0.theta:g}) workers={workers}")
    if workers == 1:
        reps = [replicate(t) for t in tasks]
    else:
        with Pool(processes=workers) as pool:
            reps = pool.map(replicate, tasks, chunksize=max(1, len(tasks) // (4 * workers)))

    failed = [r for r in reps if not r.ok]
    if failed:
        logger.warning(f"⚠️  {len(failed)}/{spec.m} replications failed; first: {failed[0].error}")
    if len(failed) > config.MAX_FAILURE_RATE * spec.m:
        raise ExperimentError(
            f"{len(failed)} of {spec.m} replications failed (limit {config.MAX_FAILURE_RATE:.0%})",
            context={
                "failures": len(failed),
                "m": spec.m,
                "n": spec.n,
                "scenario": spec.scenario,
                "psi0": spec.psi0.model_dump(),
                "errors": [f"#{r.index}: {r.error}" for r in failed[:5]],
            },
        )
    return reps


# ===========================================================================
# Tables
# ===========================================================================
def run_experiment(spec: ExperimentSpec, workers: Optional[int] = None) -> QuantileTable:
    reps = run_replications(spec, workers)
    ok = [r for r in reps if r.ok]
    failures = len(reps) - len(ok)
    psi0 = spec.psi0
    rows, samples = [], {}
    for j, label in enumerate(SCENARIO_LABELS[spec.scenario]):
        template = {
            "n": spec.n,
            "theta0": psi0.theta,
            "practical_range": psi0.practical_range,
            "rho0": psi0.rho,
            "sigma1_sq0": psi0.sigma1_sq,
            "sigma2_sq0": psi0.sigma2_sq,
            "scenario": spec.scenario,
            "statistic": label,
            "probs": tuple(spec.quantile_probs),
        }
        z = [r.standardized[j] for r in ok]
        raw = [r.estimates[j] for r in ok]
        row = _build_row(template, z, raw, failures)
        rows.append(row)
        samples[row.key] = {"standardized": z, "raw": raw}
        logger.info(f"   {label:>16}: q={[round(q, 4) for q in row.quantiles]} var={row.variance:.4g}")
    return QuantileTable(rows=rows, samples=samples)


def merge_tables(a: QuantileTable, b: QuantileTable) -> QuantileTable:
    """Rows with the same key pool their replications (a's first); other rows are kept in order."""
    rows: List[QuantileRow] = []
    samples: Dict[str, Dict[str, List[float]]] = {}
    by_key_b = {r.key: r for r in b.rows}
    for r in a.rows:
        other = by_key_b.pop(r.key, None)
        if other is None:
            rows.append(r)
            samples[r.key] = a.samples.get(r.key, {"standardized": [], "raw": []})
            continue
        if other.probs != r.probs:
            raise DomainError("cannot merge rows with different quantile probabilities",
                              context={"key": r.key})
        sa, sb = a.samples.get(r.key), b.samples.get(r.key)
        if sa is None or sb is None:
            raise DomainError("cannot merge tables without their replication values", context={"key": r.key})
        z = sa["standardized"] + sb["standardized"]
        raw = sa["raw"] + sb["raw"]
        template = r.model_dump(include={"n", "theta0", "practical_range", "rho0", "sigma1_sq0",
                                         "sigma2_sq0", "scenario", "statistic", "probs"})
        merged = _build_row(template, z, raw, r.failures + other.failures)
        rows.append(merged)
        samples[r.key] = {"standardized": z, "raw": raw}
    for key, r in by_key_b.items():
        rows.append(r)
        samples[key] = b.samples.get(key, {"standardized": [], "raw": []})
    return QuantileTable(rows=rows, samples=samples)


def run_experiments(specs: Iterable[ExperimentSpec], workers: Optional[int] = None) -> QuantileTable:
    table = QuantileTable(rows=[])
    for spec in specs:
        table = merge_tables(table, run_experiment(spec, workers))
    return table


# ===========================================================================
# Consistency
# ===========================================================================
class ConsistencyPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    median_abs_error: Dict[str, float]
    theta_sd: float
    theta_summary: Dict[str, float]
    replications: int
    failures: int


class ConsistencyReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    psi0: Params
    scenario: str
    m: int
    master_seed: int
    points: List[ConsistencyPoint]

    def errors(self, label: str) -> List[float]:
        return [p.median_abs_error[label] for p in self.points]

    def ratios(self, label: str) -> List[float]:
        e = self.errors(label)
        return [a / b if b > 0 else math.inf for a, b in zip(e, e[1:])]

    def strictly_decreasing(self, label: str) -> bool:
        e = self.errors(label)
        return all(b < a for a, b in zip(e, e[1:]))


def consistency_sweep(psi0: Params, ns: Sequence[int], m: int, scenario: str = "full",
                      master_seed: Optional[int] = None, workers: Optional[int] = None) -> ConsistencyReport:
    """Median absolute error of the microergodic estimates at each n (one experiment per n)."""
    ns = [int(n) for n in ns]
    if not ns or any(b <= a for a, b in zip(ns, ns[1:])):
        raise DomainError(f"ns must be a non-empty increasing sequence (got {ns})")
    seed = config.SEED if master_seed is None else master_seed
    truth = dict(zip(MICROERGODIC_LABELS, (psi0.theta * psi0.sigma1_sq, psi0.theta * psi0.sigma2_sq, psi0.rho)))
    points = []
    for n in ns:
        spec = ExperimentSpec(psi0=psi0, n=n, m=m, scenario=scenario, master_seed=seed)
        ok = [r for r in run_replications(spec, workers) if r.ok]
        errs = {
            label: median_abs_error([r.microergodic[j] for r in ok], truth[label])
            for j, label in enumerate(MICROERGODIC_LABELS)
        }
        thetas = [r.psi_hat[3] for r in ok]
        points.append(ConsistencyPoint(n=n, median_abs_error=errs, theta_sd=math.sqrt(sample_variance(thetas)),
                                       theta_summary=summarize_values(thetas),
                                       replications=len(ok), failures=m - len(ok)))
        logger.info(f"   n={n}: " + ", ".join(f"{k}={v:.4g}" for k, v in errs.items()))
    return ConsistencyReport(psi0=psi0, scenario=scenario, m=m, master_seed=seed, points=points)


# ===========================================================================
# Config files and output
# ===========================================================================
def load_experiment_config(path, m: Optional[int] = None, n: Optional[int] = None,
                           master_seed: Optional[int] = None) -> Tuple[str, List[ExperimentSpec]]:
    """
    Read a JSON config: either one ExperimentSpec object or
    {"name": ..., <shared spec fields>, "experiments": [<spec fields>, ...]}.
    m / n / master_seed override every spec; specs that collapse onto each other are dropped.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise SampleIOError(f"cannot read experiment config: {exc.strerror or exc}", context={"path": str(path)}) from exc
    except json.JSONDecodeError as exc:
        raise SampleIOError(f"experiment config is not valid JSON: {exc.msg}",
                            context={"path": str(path), "line": exc.lineno}) from exc
    if not isinstance(doc, dict):
        raise DomainError("experiment config must be a JSON object", context={"path": str(path)})

    name = str(doc.get("name", path.stem))
    shared = {k: v for k, v in doc.items() if k not in ("name", "experiments", "description")}
    entries = doc.get("experiments") or [{}]
    overrides = {k: v for k, v in (("m", m), ("n", n), ("master_seed", master_seed)) if v is not None}

    specs, seen = [], set()
    for entry in entries:
        spec = ExperimentSpec(**{**shared, **entry, **overrides})
        fingerprint = spec.model_dump_json(exclude={"label"})
        if fingerprint in seen:
            continue
        seen.add(fingerprint)
        specs.append(spec)
    return name, specs


def csv_header(probs: Sequence[float]) -> List[str]:
    return (["n", "theta0", "practical_range", "rho0", "sigma1_sq0", "sigma2_sq0", "scenario", "statistic"]
            + [f"q{p * 100:g}" for p in probs]
            + ["variance", "replications", "failures"])


def write_table_csv(table: QuantileTable, path) -> Path:
    path = Path(path)
    probs = table.rows[0].probs if table.rows else DEFAULT_PROBS
    try:
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(csv_header(probs))
            for r in table.rows:
                w.writerow([r.n, repr(r.theta0), repr(r.practical_range), repr(r.rho0), repr(r.sigma1_sq0),
                            repr(r.sigma2_sq0), r.scenario, r.statistic]
                           + [f"{q:.6f}" for q in r.quantiles]
                           + [f"{r.variance:.6g}", r.replications, r.failures])
    except OSError as exc:
        raise SampleIOError(f"cannot write table: {exc.strerror or exc}", context={"path": str(path)}) from exc
    return path


def table_summary(table: QuantileTable, meta: Dict) -> Dict:
    probs = table.rows[0].probs if table.rows else DEFAULT_PROBS
    ref = N01_REFERENCE_ROW if tuple(probs) == DEFAULT_PROBS else tuple(round(q, 4) for q in normal_quantiles(probs))
    return {
        "meta": meta,
        "rows": [r.model_dump() for r in table.rows],
        "reference": {"statistic": "N(0,1)", "probs": list(probs), "quantiles": list(ref)},
    }
