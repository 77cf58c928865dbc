"""``catprior`` command line.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
Every global flag can also be set through an environment variable named
``CATPRIOR_<FLAG>`` (e.g. ``CATPRIOR_SEED``, ``CATPRIOR_WORKERS``); an
explicit flag wins.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import bridge, experiment
from ._validation import DimensionError
from .causal import posterior_effect_distribution
from .core import Dataset, ModelFamily, fit_simple_model, read_csv, write_csv
from .fitting import SingularSystemError, fit_cauchy_map, fit_linear_posterior, fit_map, log_posterior
from .posterior import default_proposal, laplace_approx, rw_metropolis
from .synth import CovariateScheme, SynthConfig, build_catalytic_prior, default_M, default_tau

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2
ENV_PREFIX = "CATPRIOR_"
GLOBAL_FLAGS = ("config", "seed", "out", "format", "workers")


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_globals(p):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", help="output path")
    p.add_argument("--format", choices=("json", "csv"), help="output format (default json)")
    p.add_argument("--workers", type=int, help="worker processes (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="catprior", description="Catalytic prior toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="write a simulated population CSV")
    _add_globals(p)

    p = sub.add_parser("fit", help="fit a model with a flat, Cauchy or catalytic prior")
    _add_globals(p)
    p.add_argument("--data", required=True, help="dataset CSV")
    p.add_argument("--family", choices=("gaussian", "bernoulli"), default="bernoulli")
    p.add_argument("--sigma", type=float, default=1.0, help="gaussian noise sd")
    p.add_argument("--prior", choices=("flat", "catalytic", "cauchy"), default="catalytic")
    p.add_argument("--tau", type=float)
    p.add_argument("--m", type=int, dest="M", help="synthetic sample size")
    p.add_argument("--simple", default="", help="comma-separated simple-model covariates")
    p.add_argument("--scheme", choices=("marginal_resample", "joint_resample"),
                   default="marginal_resample")
    p.add_argument("--mode", choices=("expected_value", "stochastic"))
    p.add_argument("--method", choices=("map", "linear", "mcmc"), default="map")
    p.add_argument("--steps", type=int, default=50_000, help="MCMC steps")
    p.add_argument("--thin", type=int, default=5)
    p.add_argument("--draws", help="write MCMC draws to this CSV")

    p = sub.add_parser("effect", help="posterior of the average log probability ratio")
    _add_globals(p)
    p.add_argument("--samples-t", required=True)
    p.add_argument("--samples-c", required=True)
    p.add_argument("--covariates", required=True, help="dataset CSV of units to average over")
    p.add_argument("--group", action="append", default=[],
                   help="subgroup expression, e.g. 'hsdip == 1' (repeatable)")
    p.add_argument("--level", type=float, default=0.99)
    p.add_argument("--draws", help="write effect draws to this CSV")

    p = sub.add_parser("experiment", help="run the subsampling benchmark")
    _add_globals(p)
    p.add_argument("--mixture", action="store_true",
                   help="add the single-covariate and mixture catalytic variants")

    p = sub.add_parser("bridge-check", help="certify penalised-regression equivalences")
    _add_globals(p)
    p.add_argument("--kind", action="append", choices=bridge.KINDS)
    p.add_argument("--instances", type=int, default=1)
    return parser


def _apply_env(args):
    for flag in GLOBAL_FLAGS:
        if getattr(args, flag, None) is None:
            val = os.environ.get(ENV_PREFIX + flag.upper())
            if val is not None:
                setattr(args, flag, int(val) if flag in ("seed", "workers") else val)
    if getattr(args, "format", None) not in (None, "json", "csv"):
        raise UsageError(f"format must be json or csv, got {args.format!r}")
    args.format = args.format or "json"
    args.workers = args.workers or 1


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None


def _write_json(obj, out):
    text = json.dumps(obj, indent=2)
    if out is None:
        print(text)
    else:
        Path(out).write_text(text + "\n")


def _check_out(out, directory=False):
    if out is None:
        return
    parent = Path(out) if directory else Path(out).parent
    if not directory and not parent.exists():
        raise UsageError(f"output directory {parent} does not exist")


# -- subcommands ------------------------------------------------------------------

def cmd_simulate(args) -> int:
    if args.out is None:
        raise UsageError("simulate needs --out")
    _check_out(args.out)
    spec_dict = _read_json(args.config) if args.config else experiment.SwimSimSpec.default().to_dict()
    if args.seed is not None:
        spec_dict["seed"] = args.seed
    try:
        spec = experiment.SwimSimSpec.from_dict(spec_dict)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad population spec: {exc}") from None
    pop = experiment.simulate_population(spec)
    write_csv(pop.data, args.out, include_weights=False)
    Path(str(args.out) + ".meta.json").write_text(spec.to_json() + "\n")
    return EXIT_OK


def _load_dataset(path) -> Dataset:
    try:
        return read_csv(path)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read dataset {path}: {exc}") from None


def cmd_fit(args) -> int:
    _check_out(args.out)
    data = _load_dataset(args.data)
    family = ModelFamily.gaussian(args.sigma) if args.family == "gaussian" else ModelFamily.bernoulli()
    if args.method == "linear" and (args.family != "gaussian" or args.prior != "catalytic"):
        raise UsageError("--method linear needs --family gaussian --prior catalytic")
    seed = 0 if args.seed is None else args.seed
    meta = {"prior": args.prior, "family": family.to_dict(), "method": args.method,
            "n": data.n, "p": data.p, "seed": seed}

    prior = None
    if args.prior == "catalytic":
        names = [c.strip() for c in args.simple.split(",") if c.strip()]
        unknown = [c for c in names if c not in data.column_names]
        if unknown:
            raise UsageError(f"unknown simple-model covariates {unknown}")
        subset = [data.column_names.index(c) for c in names]
        tau = default_tau(data.p) if args.tau is None else args.tau
        M = default_M(data.p) if args.M is None else args.M
        try:
            spec = fit_simple_model(data, subset, family)
            config = SynthConfig(M, tau, ((spec, 1.0),), CovariateScheme(args.scheme), args.mode, seed)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        prior = build_catalytic_prior(data, config)
        meta.update(tau=tau, M=M, weight=tau / M, synth_config=config.to_dict())

    if args.method == "linear":
        post = fit_linear_posterior(data, prior, args.sigma)
        result = post.to_dict()
    elif args.prior == "cauchy":
        if args.family != "bernoulli":
            raise UsageError("the Cauchy prior is for bernoulli data")
        result = fit_cauchy_map(data).to_dict()
        if not result["converged"]:
            _emit_fit(args, result, meta, data)
            raise NumericalFailure("Cauchy MAP did not converge")
    else:
        res = fit_map(data, family, prior)
        result = res.to_dict()
        if res.diverged:
            _emit_fit(args, result, meta, data)
            raise NumericalFailure(
                f"{args.prior} MAP diverged ({res.message}; |beta|={np.linalg.norm(res.beta_hat):.3g}); "
                "the data may be separated")
        if args.method == "mcmc":
            lp = log_posterior(data, family, prior)
            approx = laplace_approx(lp, res)
            chain = rw_metropolis(lp, res.beta_hat, args.steps, default_proposal(approx),
                                  seed, thin=args.thin)
            result["mcmc"] = chain.to_dict()
            result["laplace"] = approx.to_dict()
            if args.draws:
                chain.to_csv(args.draws, list(data.column_names))
    _emit_fit(args, result, meta, data)
    return EXIT_OK


def _emit_fit(args, result, meta, data):
    if args.format == "csv":
        frame = pd.DataFrame({"name": data.column_names, "mean": result["mean"]})
        if args.out is None:
            print(frame.to_csv(index=False), end="")
        else:
            frame.to_csv(args.out, index=False, float_format="%.17g")
    else:
        _write_json({"metadata": meta, "result": result}, args.out)


def _group_mask(frame: pd.DataFrame, expr: str) -> np.ndarray:
    try:
        sel = frame.eval(expr)
    except Exception as exc:  # pandas raises many types for bad expressions
        raise UsageError(f"bad subgroup expression {expr!r}: {exc}") from None
    sel = np.asarray(sel)
    if sel.dtype != bool or sel.shape != (len(frame),):
        raise UsageError(f"subgroup expression {expr!r} is not a row filter")
    return sel


def cmd_effect(args) -> int:
    _check_out(args.out)
    data = _load_dataset(args.covariates)
    try:
        st = pd.read_csv(args.samples_t, float_precision="round_trip")
        sc = pd.read_csv(args.samples_c, float_precision="round_trip")
    except OSError as exc:
        raise UsageError(str(exc)) from None
    if list(st.columns) != list(sc.columns):
        raise UsageError("the two sample files have different columns")
    missing = [c for c in st.columns if c not in data.column_names]
    if missing:
        raise UsageError(f"covariate file lacks columns {missing}")
    X = data.covariates[:, [data.column_names.index(c) for c in st.columns]]
    frame = pd.DataFrame(data.covariates, columns=data.column_names)
    groups = [("All", None)] + [(g, g) for g in args.group]
    out, draws = [], {}
    for label, expr in groups:
        mask = None if expr is None else _group_mask(frame, expr)
        try:
            eff = posterior_effect_distribution(X, mask, st.to_numpy(float), sc.to_numpy(float), label)
        except DimensionError as exc:
            raise UsageError(str(exc)) from None
        except ValueError as exc:
            raise UsageError(f"group {label!r}: {exc}") from None
        rec = eff.to_dict(args.level)
        rec["n_units"] = int(data.n if mask is None else mask.sum())
        out.append(rec)
        draws[label] = eff.draws
    if args.draws:
        pd.DataFrame(draws).to_csv(args.draws, index=False, float_format="%.17g")
    if args.format == "csv":
        frame = pd.DataFrame([{"group": r["group"], "n_units": r["n_units"],
                               "mean": r["summary"]["mean"], "lower": r["summary"]["lower"],
                               "upper": r["summary"]["upper"], "level": args.level} for r in out])
        if args.out is None:
            print(frame.to_csv(index=False), end="")
        else:
            frame.to_csv(args.out, index=False, float_format="%.17g")
    else:
        _write_json({"level": args.level, "effects": out}, args.out)
    return EXIT_OK


def experiment_config(args) -> experiment.ExperimentConfig:
    d = _read_json(args.config) if args.config else {}
    if args.seed is not None:
        d["seed"] = args.seed
    try:
        cfg = experiment.ExperimentConfig.from_dict(d)
    except (TypeError, ValueError, KeyError) as exc:
        raise UsageError(f"bad experiment config: {exc}") from None
    if getattr(args, "mixture", False):
        cfg.catalytic = experiment.mixture_setups()
    return cfg


def cmd_experiment(args) -> int:
    if args.out is None:
        raise UsageError("experiment needs --out <directory>")
    cfg = experiment_config(args)
    try:
        results, bm = experiment.run_experiment(cfg, workers=args.workers)
    except experiment.BenchmarkError as exc:
        raise NumericalFailure(str(exc)) from None
    report = experiment.aggregate(results, benchmark=bm)
    experiment.write_report(report, args.out, results)
    Path(args.out, "config.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
    main_file = "report.json" if args.format == "json" else "table.csv"
    print(Path(args.out, main_file))
    return EXIT_OK


def cmd_bridge_check(args) -> int:
    _check_out(args.out)
    kinds = args.kind or list(bridge.KINDS)
    seed = 0 if args.seed is None else args.seed
    reports = bridge.certify_kinds(kinds, args.instances, seed)
    recs = [dict(label=label, instance=i, **rep.to_dict()) for label, i, rep in reports]
    failed = [r for r in recs if r["guarantee"] == "global" and not r["passed"]]
    if args.format == "csv":
        cols = ["label", "instance", "kind", "guarantee", "passed", "objective_gap", "argmin_gap",
                "identity_gap", "consistent_starts"]
        frame = pd.DataFrame(recs)[cols]
        if args.out is None:
            print(frame.to_csv(index=False), end="")
        else:
            frame.to_csv(args.out, index=False, float_format="%.17g")
    else:
        _write_json({"seed": seed, "reports": recs, "all_convex_passed": not failed}, args.out)
    if failed:
        raise NumericalFailure(f"{len(failed)} convex certification(s) failed")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "effect": cmd_effect,
            "experiment": cmd_experiment, "bridge-check": cmd_bridge_check}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _apply_env(args)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"catprior {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalFailure, SingularSystemError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"catprior {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
