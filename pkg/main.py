"""
Command-line front end.

  python main.py simulate   --n 100 --sigma1-sq 1 --sigma2-sq 1 --rho 0.5 --theta 15 --out sample.csv
  python main.py fit        --input sample.csv [--pin rho=0 --pin sigma1-sq=1 ...]
  python main.py entropy    --psi1 1 1 0.5 3 --psi2 2 2 0.5 1.5 --n 200 [--grid uniform] [--dense]
  python main.py asymcov    --scenario full --sigma1-sq 0.5 --sigma2-sq 0.5 --rho 0.5 --theta 15
  python main.py montecarlo --config docs/table1.json [--m 10] [--n 200] --out-csv t.csv --out-json t.json

Structured results go to stdout (or --out paths) as JSON, samples and tables
as CSV. Exit codes: 0 ok, 2 usage / invalid input, 3 numeric or estimation
failure, 4 file IO failure; failures print {"error", "message", "context"} on
stderr. Nothing is written to a path that was not given on the command line.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from loguru import logger

from bivou.asymptotics import SCENARIOS, asym_cov, symmetrized_entropy
from bivou.core import PARAM_NAMES, ParamBox, Params, SamplingGrid, params_summary
from bivou.errors import BivouError, DomainError, SampleIOError
from bivou.estimate import fit_mle, fit_summary
from bivou.samples_io import read_sample_csv, write_sample_csv
from bivou.simulate import SimConfig, make_rng, simulate
from config import config, configure_logging
from experiments.montecarlo.engine import load_experiment_config, run_experiments, table_summary, write_table_csv

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


# ===========================================================================
# Argument helpers
# ===========================================================================
def add_param_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sigma1-sq", type=float, required=True)
    p.add_argument("--sigma2-sq", type=float, required=True)
    p.add_argument("--rho", type=float, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--theta", type=float)
    g.add_argument("--practical-range", type=float, help="x with theta = 3 / x")


def params_from_args(args: argparse.Namespace) -> Params:
    if args.practical_range is not None:
        return Params.from_practical_range(args.sigma1_sq, args.sigma2_sq, args.rho, args.practical_range)
    return Params.of(args.sigma1_sq, args.sigma2_sq, args.rho, args.theta)


def parse_pins(pins: Sequence[str]) -> Dict[str, float]:
    out: Dict[str, float] = {}
    for item in pins or []:
        name, sep, value = item.partition("=")
        name = name.strip().replace("-", "_")
        if not sep or name not in PARAM_NAMES:
            raise DomainError(f"--pin expects name=value with name in {list(PARAM_NAMES)} (got {item!r})")
        try:
            out[name] = float(value)
        except ValueError:
            raise DomainError(f"--pin value for {name} is not a number (got {value!r})") from None
    return out


def make_grid(kind: str, n: int, seed: int) -> SamplingGrid:
    if kind == "equispaced":
        return SamplingGrid.equispaced(n)
    return SamplingGrid.uniform(n, make_rng(seed, (1,)))


def emit_json(doc: Dict, out: Optional[str]) -> None:
    text = json.dumps(doc, indent=2)
    if out:
        try:
            Path(out).write_text(text + "\n")
        except OSError as exc:
            raise SampleIOError(f"cannot write output: {exc.strerror or exc}", context={"path": out}) from exc
    else:
        print(text)


# ===========================================================================
# Subcommands
# ===========================================================================
def cmd_simulate(args: argparse.Namespace) -> int:
    psi = params_from_args(args)
    if args.n < 1:
        raise DomainError(f"--n must be >= 1 (got {args.n})")
    grid = make_grid(args.grid, args.n, args.seed)
    cfg = SimConfig(params=psi, grid=grid, seed=args.seed, method=args.method, stream=(0,))
    sample = simulate(cfg)
    write_sample_csv(sample, args.out)
    meta = {
        "command": "simulate",
        "output": args.out,
        "seed": args.seed,
        "stream": [0],
        "grid": args.grid,
        "n": args.n,
        "method": args.method,
        "params": params_summary(psi),
    }
    logger.info(f"🧪 simulated n={args.n} ({args.method}, {args.grid} grid, seed={args.seed}) -> {args.out}")
    if args.meta:
        emit_json(meta, args.meta)
    return EXIT_OK


def cmd_fit(args: argparse.Namespace) -> int:
    sample = read_sample_csv(args.input)
    pins = parse_pins(args.pin)
    base = ParamBox.default()
    if args.theta_bounds:
        base = ParamBox(**{**base.model_dump(), "theta": tuple(args.theta_bounds)})
    box = ParamBox.pinned(base, **pins) if pins else base
    fit = fit_mle(sample, box)
    doc = {
        "meta": {"command": "fit", "input": args.input, "n": sample.n, "pinned": pins,
                 "box": box.model_dump()},
        "fit": fit_summary(fit),
    }
    emit_json(doc, args.out)
    return EXIT_OK


def cmd_entropy(args: argparse.Namespace) -> int:
    psi1 = Params.from_vector(args.psi1)
    psi2 = Params.from_vector(args.psi2)
    grid = make_grid(args.grid, args.n, args.seed)
    report = symmetrized_entropy(psi1, psi2, grid, dense=args.dense, tol=args.tol)
    doc = {
        "meta": {"command": "entropy", "n": args.n, "grid": args.grid, "seed": args.seed,
                 "psi1": psi1.model_dump(), "psi2": psi2.model_dump()},
        "entropy": report.model_dump(),
    }
    emit_json(doc, args.out)
    return EXIT_OK


def cmd_asymcov(args: argparse.Namespace) -> int:
    psi0 = params_from_args(args)
    cov = asym_cov(args.scenario, psi0)
    doc = {
        "meta": {"command": "asymcov", "scenario": args.scenario, "psi0": params_summary(psi0)},
        "asymcov": cov.model_dump(),
    }
    emit_json(doc, args.out)
    return EXIT_OK


def cmd_montecarlo(args: argparse.Namespace) -> int:
    name, specs = load_experiment_config(args.config, m=args.m, n=args.n, master_seed=args.seed)
    workers = args.workers if args.workers is not None else config.WORKERS
    logger.info(f"🎲 {name}: {len(specs)} experiment(s), workers={workers}")
    table = run_experiments(specs, workers)
    meta = {
        "command": "montecarlo",
        "name": name,
        "config": args.config,
        "specs": [s.model_dump() for s in specs],
    }
    if args.out_csv:
        write_table_csv(table, args.out_csv)
    doc = table_summary(table, meta)
    if args.out_json or not args.out_csv:
        emit_json(doc, args.out_json)
    return EXIT_OK


# ===========================================================================
# Entry point
# ===========================================================================
def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bivou", description=__doc__.splitlines()[1])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw one sample and write it as CSV")
    add_param_args(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=config.SEED)
    p.add_argument("--grid", choices=["uniform", "equispaced"], default="uniform")
    p.add_argument("--method", choices=["recursive", "dense"], default="recursive")
    p.add_argument("--out", required=True, help="sample CSV path")
    p.add_argument("--meta", help="optional JSON provenance path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="maximum likelihood fit of a sample CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--pin", action="append", default=[], metavar="NAME=VALUE")
    p.add_argument("--theta-bounds", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--out", help="JSON path (default stdout)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("entropy", help="symmetrized entropy and equivalence class of two parameter sets")
    p.add_argument("--psi1", type=float, nargs=4, required=True, metavar=("S1", "S2", "RHO", "THETA"))
    p.add_argument("--psi2", type=float, nargs=4, required=True, metavar=("S1", "S2", "RHO", "THETA"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--grid", choices=["equispaced", "uniform"], default="equispaced")
    p.add_argument("--seed", type=int, default=config.SEED)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--dense", action="store_true", help="use the O(n^3) dense oracle")
    p.add_argument("--out", help="JSON path (default stdout)")
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("asymcov", help="asymptotic covariance of the MLE")
    p.add_argument("--scenario", choices=list(SCENARIOS), required=True)
    add_param_args(p)
    p.add_argument("--out", help="JSON path (default stdout)")
    p.set_defaults(func=cmd_asymcov)

    p = sub.add_parser("montecarlo", help="run Monte Carlo experiments from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--m", type=int, default=None, help="override replications per experiment")
    p.add_argument("--n", type=int, default=None, help="override sample size")
    p.add_argument("--seed", type=int, default=None, help="override master seed")
    p.add_argument("--workers", type=int, default=None, help=f"default BIVOU_WORKERS ({config.WORKERS})")
    p.add_argument("--out-csv")
    p.add_argument("--out-json")
    p.set_defaults(func=cmd_montecarlo)
    return ap


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, DomainError):
        return EXIT_USAGE
    if isinstance(exc, (SampleIOError, OSError)):
        return EXIT_IO
    return EXIT_NUMERIC


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging()
    try:
        return args.func(args)
    except BivouError as exc:
        print(json.dumps(exc.as_dict(), default=str), file=sys.stderr)
        return exit_code_for(exc)
    except OSError as exc:
        print(json.dumps({"error": "io", "message": str(exc), "context": {"path": exc.filename}}), file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
