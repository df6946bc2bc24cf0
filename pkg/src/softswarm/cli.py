"""Command-line front end: run experiments, validate invariants, list objectives.

``run`` executes the experiment described by a YAML config and writes
``results.csv`` (one row per trial), ``summary.json`` (per-cell statistics
plus the normalized config), and two-column plot-data files, one per curve.
Exit codes: 0 success, 1 validation failure, 2 config error, 3 at least one
diverged trial, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, dynamics, experiments, objectives, validation
from .config import RunConfig, parse_config
from .errors import ConfigError, DivergenceError
from .experiments import METHODS, InitSpec, aggregate
from .rng import derive_seed

CSV_COLUMNS = [
    "experiment", "objective", "params", "method", "schedule", "n", "d",
    "beta0", "gamma", "sigma", "dt", "sweep_key", "run_index", "seed", "hit",
    "hitting_time", "steps_used", "theory_exponent", "censored_flag",
]


def _fmt(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _params_str(params: dict) -> str:
    return ";".join(f"{k}={params[k]:g}" for k in sorted(params)) or "NA"


def _censored_flag(trial) -> str:
    if trial.hit:
        return "none"
    return "diverged" if trial.diverged else "censored"


def _rows_for(cfg: RunConfig, result: experiments.ExperimentResult):
    spec = objectives.get_objective(cfg.objective_name, **cfg.objective_params)
    single = result.experiment == "single_trajectory"
    for cell in result.cells:
        sched_kind = METHODS[cell.method][1]
        params = dict(cfg.objective_params)
        if result.sweep_key == "a":
            params["a"] = cell.sweep_value
        n = int(cell.sweep_value) if result.sweep_key == "n" else cfg.n
        for trial in cell.trials:
            yield {
                "experiment": result.experiment,
                "objective": cfg.objective_name,
                "params": _params_str(params),
                "method": cell.method,
                "schedule": sched_kind,
                "n": n,
                "d": spec.dimension,
                "beta0": _fmt(cfg.beta0),
                "gamma": _fmt(cfg.gamma),
                "sigma": _fmt(cfg.sigma),
                "dt": _fmt(cfg.dt),
                "sweep_key": "NA" if single else _fmt(cell.sweep_value),
                "run_index": trial.run_index,
                "seed": trial.seed,
                "hit": _fmt(trial.hit),
                "hitting_time": _fmt(trial.hitting_time),
                "steps_used": trial.steps_used,
                "theory_exponent": _fmt(trial.theory_exponent),
                "censored_flag": _censored_flag(trial),
            }


def _summary_cells(result: experiments.ExperimentResult):
    for cell in result.cells:
        s = cell.stats
        yield {
            "sweep_key": result.sweep_key,
            "sweep_value": cell.sweep_value,
            "method": cell.method,
            "count": s.count,
            "hits": s.hits,
            "censored": s.censored,
            "mean_time": s.mean_time,
            "std_time": s.std_time,
            "theory_exponent": cell.theory_exponent,
            "flagged": s.flagged,
        }


def _write_outputs(out: Path, cfg: RunConfig,
                   result: experiments.ExperimentResult):
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "results.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in _rows_for(cfg, result):
            writer.writerow(row)
    summary = {
        "config": cfg.to_dict(),
        "cells": list(_summary_cells(result)),
        "version": __version__,
    }
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_plot_data(out, result)


def _write_plot_data(out: Path, result: experiments.ExperimentResult):
    if result.experiment == "exit_time":
        emp, theo = [], []
        for cell in result.cells:
            if cell.stats.hits > 0:
                emp.append((cell.sweep_value, float(np.log(cell.stats.mean_time))))
            theo.append((cell.sweep_value, cell.theory_exponent))
        _write_curve(out / "exit_time_empirical.dat", emp)
        _write_curve(out / "exit_time_theory.dat", theo)
        return
    by_method = {}
    for cell in result.cells:
        if cell.stats.hits > 0:
            by_method.setdefault(cell.method, []).append(
                (cell.sweep_value, cell.stats.mean_time))
    for method, points in by_method.items():
        _write_curve(out / f"{result.experiment}_{method}.dat", points)


def _write_curve(path: Path, points):
    with open(path, "w") as fh:
        for x, y in points:
            fh.write(f"{x:.17g} {y:.17g}\n")


def _run_experiment(cfg: RunConfig) -> experiments.ExperimentResult:
    common = dict(runs=cfg.runs, master_seed=cfg.master_seed,
                  threads=cfg.threads, dt=cfg.dt, max_steps=cfg.max_steps)
    if cfg.experiment == "exit_time":
        return experiments.exit_time_experiment(
            list(cfg.sweep_values), beta=cfg.beta0, sigma=cfg.sigma, n=cfg.n,
            ball_radius=cfg.init_radius, **common)
    if cfg.experiment == "transition_time":
        return experiments.transition_time_experiment(
            cfg.objective_name, [float(v) for v in cfg.sweep_values],
            methods=list(cfg.methods), n=cfg.n, beta0=cfg.beta0,
            gamma=cfg.gamma, sigma=cfg.sigma, init_radius=cfg.init_radius,
            epsilon=cfg.stop_epsilon, quorum=cfg.stop_quorum,
            which_minimum=cfg.init_which_minimum, **common)
    if cfg.experiment == "particle_sweep":
        return experiments.particle_sweep_experiment(
            [int(v) for v in cfg.sweep_values],
            a=float(cfg.objective_params.get("a", 1.0)),
            methods=list(cfg.methods), beta0=cfg.beta0, gamma=cfg.gamma,
            sigma=cfg.sigma, init_radius=cfg.init_radius,
            epsilon=cfg.stop_epsilon, **common)
    if cfg.experiment == "entry_time":
        return experiments.entry_time_experiment(
            list(cfg.sweep_values), methods=list(cfg.methods), n=cfg.n,
            beta0=cfg.beta0, gamma=cfg.gamma, sigma=cfg.sigma,
            jitter=cfg.init_gauss_std, epsilon=cfg.stop_epsilon, **common)
    return _run_single_trajectory(cfg)


def _run_single_trajectory(cfg: RunConfig) -> experiments.ExperimentResult:
    spec = objectives.get_objective(cfg.objective_name, **cfg.objective_params)
    method = cfg.methods[0]
    seed = derive_seed(cfg.master_seed, 0, 0)
    which = cfg.init_which_minimum or 0
    if cfg.init_kind == "circle_around_point":
        init = InitSpec("circle_around_point", radius=cfg.init_radius,
                        gauss_std=cfg.init_gauss_std)
    else:
        init = InitSpec("ball_around_minimum", radius=cfg.init_radius,
                        which_minimum=which)
    swarm = experiments.init_swarm(spec, init, cfg.n, seed)
    icfg = dynamics.IntegratorConfig(dt=cfg.dt, sigma=cfg.sigma,
                                     max_steps=cfg.max_steps, seed=seed,
                                     method=METHODS[method][0])
    schedule = experiments._schedule_for(method, cfg.beta0, cfg.gamma)
    diverged_step = None
    try:
        sim = dynamics.run_simulation(swarm, spec, schedule, icfg,
                                      lambda sw, rec: False,
                                      trace_stride=max(1, cfg.trace_stride))
        trace = sim.trace
        steps_used = cfg.max_steps
    except DivergenceError as err:
        diverged_step = err.step
        trace = ()
        steps_used = err.step + 1
    trial = experiments.TrialResult(
        run_index=0, seed=seed, hit=False, hitting_time=None,
        steps_used=steps_used, diverged=diverged_step is not None)
    cell = experiments.Cell(0.0, method, (trial,), aggregate([trial]))
    result = experiments.ExperimentResult("single_trajectory", spec.id, "none",
                                          (cell,), {"trace": trace})
    return result


def _write_trace(out: Path, result: experiments.ExperimentResult):
    trace = result.meta.get("trace", ())
    with open(out / "trajectory.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "time", "beta", "energy", "min_f"])
        for rec in trace:
            writer.writerow([rec.step, repr(rec.time), repr(rec.beta),
                             repr(rec.energy), repr(rec.min_f)])


def cmd_run(args) -> int:
    try:
        text = Path(args.config).read_text()
    except OSError as err:
        print(f"error: cannot read config: {err}", file=sys.stderr)
        return 4
    try:
        cfg = parse_config(text)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if args.threads is not None:
        cfg = replace(cfg, threads=args.threads)
    result = _run_experiment(cfg)
    try:
        out = Path(args.out)
        _write_outputs(out, cfg, result)
        if cfg.experiment == "single_trajectory":
            _write_trace(out, result)
    except OSError as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return 4
    diverged = sum(t.diverged for c in result.cells for t in c.trials)
    hits = sum(c.stats.hits for c in result.cells)
    censored = sum(c.stats.censored for c in result.cells)
    print(f"{cfg.experiment}: {hits} hits, {censored} censored "
          f"({diverged} diverged) -> {args.out}")
    return 3 if diverged else 0


def cmd_validate(_args) -> int:
    results = validation.run_all()
    width = max(len(r.name) for r in results)
    failures = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        failures += not r.passed
        print(f"{r.name:<{width}}  {status}  {r.detail}")
    print(f"{len(results) - failures}/{len(results)} checks passed")
    return 0 if failures == 0 else 1


def cmd_catalog(_args) -> int:
    entries = [
        objectives.double_well(1.0),
        objectives.double_well(2.0),
        objectives.quadruple_well(2.0),
        objectives.ackley(),
        objectives.quadratic(2.0, dim=2),
    ]
    for spec in entries:
        lam = spec.strong_convexity_lambda
        print(f"{spec.id}  d={spec.dimension}  "
              f"box={spec.domain_box.tolist()}  "
              f"strong_convexity={'none' if lam is None else lam}")
        for label, group in (("min", spec.minima), ("max", spec.maxima),
                             ("saddle", spec.saddles)):
            for pt, val in group:
                print(f"  {label:<6} {np.round(pt, 6).tolist()}  f={val:.6f}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="softswarm",
        description="Soft-min swarm optimizer experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("--config", required=True, help="YAML config path")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override master_seed")
    p_run.add_argument("--threads", type=int, default=None,
                       help="override worker thread count")
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="run the invariant check suite")
    p_val.set_defaults(func=cmd_validate)

    p_cat = sub.add_parser("catalog", help="print objective metadata")
    p_cat.set_defaults(func=cmd_catalog)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
