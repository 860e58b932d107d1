"""Command-line entry point.

Exit codes: 0 success, 2 invalid input, 3 numerical failure (tied order
statistics, kernel not PSD, singular system). Failures print one JSON
line ``{"error": <kind>, "message": <text>}`` on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

from . import __version__
from .errors import NumericalError
from .evt_core import ExtremeIndex, KSequence, TailGrid, check_condition_k, check_rc, model_from_id
from .functionals import GridMeasure, integral_estimator, sigma2
from .limit_gaussian import CLOSED, CONSTRUCTIVE, PRINTED, CovarianceKernel, simulate_limit_matrix
from .mc_harness import (
    FULL,
    SPACINGS,
    run_covariance_experiment,
    run_lemma1_experiment,
    run_modulus_experiment,
    run_normality_experiment,
)
from .optimizer import OptimizationProblem, optimize_measure
from .pickands import pickands_point, theoretical_pickands
from .samplers import RngStream, read_sample_csv, sample_sorted, write_sample_csv

SEED_ENV = "GENPICKANDS_SEED"
SCHEMA = 1


def _default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


def _floats(text: str) -> list:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list:
    return [int(float(x)) for x in text.split(",") if x.strip()]


def _emit(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _config_echo(args) -> dict:
    skip = {"func", "out", "csv"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _csv_text(rows, header=None, config=None) -> str:
    buf = io.StringIO()
    if config is not None:
        buf.write("# " + json.dumps(config, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(header)
    for r in rows:
        w.writerow(["nan" if isinstance(v, float) and math.isnan(v) else (repr(v) if isinstance(v, float) else v)
                    for v in r])
    return buf.getvalue()


def _load_sample(args):
    if bool(args.input) == bool(args.model):
        raise ValueError("give exactly one of --input or --model")
    if args.input:
        return read_sample_csv(args.input), None
    if args.n is None:
        raise ValueError("--model needs --n")
    model = model_from_id(args.model)
    return sample_sorted(model, args.n, RngStream(args.seed, args.stream)), model


# --- subcommands -----------------------------------------------------------


def cmd_sample(args):
    model = model_from_id(args.model)
    sample = sample_sorted(model, args.n, RngStream(args.seed, args.stream))
    if args.out in (None, "-"):
        buf = io.StringIO()
        buf.write("x\n")
        for v in sample.values:
            buf.write(repr(float(v)) + "\n")
        sys.stdout.write(buf.getvalue())
    else:
        write_sample_csv(sample, args.out)


def cmd_estimate(args):
    sample, model = _load_sample(args)
    grid = TailGrid.parse(args.grid)
    K = None
    if args.gamma is not None:
        K = ExtremeIndex(args.gamma).k_of_gamma
    elif model is not None:
        K = model.K
    rk = math.sqrt(args.k)
    rows = []
    for s in grid.points:
        try:
            P = pickands_point(sample, args.k, s)
        except NumericalError:
            P = math.nan
        p = math.nan
        if model is not None:
            try:
                p = theoretical_pickands(model, sample.n, args.k, s)
            except (NumericalError, ValueError):
                p = math.nan
        kappa = rk * (P - p)
        kstar = rk * (P - K) if K is not None else math.nan
        rows.append([s, P, p, kappa, kstar])
    cfg = dict(_config_echo(args), n_sample=sample.n, schema=SCHEMA)
    _emit(_csv_text(rows, ["s", "P_n", "p_n", "kappa", "kappa_star"], cfg), args.out)


def cmd_integral_estimate(args):
    sample, model = _load_sample(args)
    measure = GridMeasure.load(args.measure)
    est = integral_estimator(sample, args.k, measure)
    K = args.K if args.K is not None else (model.K if model is not None else None)
    se = None
    if K is not None:
        se = math.sqrt(max(sigma2(measure, CovarianceKernel(K)), 0.0) / args.k)
    out = {"schema": SCHEMA, "config": dict(_config_echo(args), n_sample=sample.n),
           "estimate": est, "std_error": se, "total_mass": measure.total_mass}
    _emit(_json(out), args.out)


def cmd_limit_cov(args):
    grid = TailGrid.parse(args.grid)
    M = CovarianceKernel(args.K, args.form).matrix(grid.s)
    _emit(_csv_text(M.tolist(), None, dict(_config_echo(args), s=list(grid.points), schema=SCHEMA)), args.out)


def cmd_simulate_paths(args):
    grid = TailGrid.parse(args.grid)
    X = simulate_limit_matrix(args.K, grid, args.paths, RngStream(args.seed, 0), args.workers)
    cfg = dict(_config_echo(args), s=list(grid.points), schema=SCHEMA)
    cfg.pop("workers", None)
    _emit(_csv_text(X.tolist(), None, cfg), args.out)


def cmd_optimize_measure(args):
    grid = TailGrid.parse(args.grid)
    problem = OptimizationProblem.from_kernel(CovarianceKernel(args.K), grid, args.nonneg, args.ridge)
    res = optimize_measure(problem, grid)
    out = dict(res.to_dict(), schema=SCHEMA, config=_config_echo(args))
    _emit(_json(out), args.out)


def cmd_check_conditions(args):
    kseq = KSequence.from_rule(args.k_rule)
    ck = check_condition_k(kseq, args.n, args.improvement)
    model = model_from_id(args.model)
    rc = check_rc(model, kseq, args.lam, args.a, args.n, args.shrink)
    out = {"schema": SCHEMA, "config": _config_echo(args), "condition_k": ck.to_dict(), "rc": rc.to_dict(),
           "accepted": bool(ck.accepted and rc.rc1_trend_to_zero and rc.rc2_trend_to_zero)}
    _emit(_json(out), args.out)


def _k_arg(args):
    if args.k_rule:
        return KSequence.from_rule(args.k_rule)
    if args.k is None:
        raise ValueError("give --k or --k-rule")
    return args.k


def _finish_report(report, args):
    _emit(report.to_json() + "\n", args.out)
    if args.csv:
        report.write_points_csv(args.csv)


def cmd_mc_normality(args):
    grid = TailGrid.parse(args.grid)
    measure = None
    if args.measure:
        measure = GridMeasure.load(args.measure)
    elif args.uniform_measure:
        measure = GridMeasure.uniform(grid.s)
    rep = run_normality_experiment(model_from_id(args.model), _k_arg(args), args.n, grid, args.reps,
                                   args.seed, args.workers, args.method, measure)
    _finish_report(rep, args)


def cmd_mc_covariance(args):
    rep = run_covariance_experiment(model_from_id(args.model), args.n, _k_arg(args), TailGrid.parse(args.grid),
                                    args.reps, args.seed, args.workers, args.method)
    _finish_report(rep, args)


def cmd_mc_lemma1(args):
    if args.s:
        s_values = _floats(args.s)
    elif args.grid:
        s_values = list(TailGrid.parse(args.grid).points)
    else:
        raise ValueError("give --s or --grid")
    k = _k_arg(args)
    k = k(args.n) if isinstance(k, KSequence) else k
    _finish_report(run_lemma1_experiment(args.n, k, s_values, args.reps, args.seed, args.workers, args.method),
                   args)


def cmd_mc_modulus(args):
    rep = run_modulus_experiment(args.K, TailGrid.parse(args.grid), args.paths, _floats(args.h), args.seed,
                                 args.workers)
    _finish_report(rep, args)


# --- parser ----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """Argument errors become the same one-line JSON as other validation failures."""

    def error(self, message):
        self.exit(2, json.dumps({"error": "validation", "message": f"{self.prog}: {message}"}) + "\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="genpickands", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        if seed:
            sp.add_argument("--seed", type=int, default=_default_seed())

    def sample_source(sp):
        sp.add_argument("--input", help="single-column CSV of observations")
        sp.add_argument("--model", help="pareto:<g>, weibull:<g>, uniform, exponential or model.json")
        sp.add_argument("--n", type=int)
        sp.add_argument("--stream", type=int, default=0)

    sp = sub.add_parser("sample", help="draw a sample and write it as CSV")
    sp.add_argument("--model", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--stream", type=int, default=0)
    common(sp)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("estimate", help="P_n, p_n, kappa, kappa* on a grid (CSV)")
    sample_source(sp)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--grid", required=True, help="a,b,m")
    sp.add_argument("--gamma", type=float)
    common(sp)
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("integral-estimate", help="integral estimator for a measure.json (JSON)")
    sample_source(sp)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--measure", required=True)
    sp.add_argument("--K", type=float, help="K for the standard error (defaults to the model's)")
    common(sp)
    sp.set_defaults(func=cmd_integral_estimate)

    sp = sub.add_parser("limit-cov", help="kernel matrix on a grid (CSV)")
    sp.add_argument("--K", type=float, required=True)
    sp.add_argument("--grid", required=True)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--constructive", dest="form", action="store_const", const=CONSTRUCTIVE)
    g.add_argument("--closed", dest="form", action="store_const", const=CLOSED)
    g.add_argument("--printed", dest="form", action="store_const", const=PRINTED)
    sp.set_defaults(form=CONSTRUCTIVE)
    common(sp, seed=False)
    sp.set_defaults(func=cmd_limit_cov)

    sp = sub.add_parser("simulate-paths", help="limit-process paths, one per CSV row")
    sp.add_argument("--K", type=float, required=True)
    sp.add_argument("--grid", required=True)
    sp.add_argument("--paths", type=int, required=True)
    sp.add_argument("--workers", type=int, default=1)
    common(sp)
    sp.set_defaults(func=cmd_simulate_paths)

    sp = sub.add_parser("optimize-measure", help="minimum-variance grid measure (JSON)")
    sp.add_argument("--K", type=float, required=True)
    sp.add_argument("--grid", required=True)
    sp.add_argument("--nonneg", action="store_true")
    sp.add_argument("--ridge", type=float, default=1e-10)
    common(sp, seed=False)
    sp.set_defaults(func=cmd_optimize_measure)

    sp = sub.add_parser("check-conditions", help="condition (K) and RC1/RC2 trend checks (JSON)")
    sp.add_argument("--model", required=True)
    sp.add_argument("--k-rule", required=True)
    sp.add_argument("--lambda", dest="lam", type=float, default=2.0)
    sp.add_argument("--a", type=float, default=0.5)
    sp.add_argument("--n", type=_ints, required=True, help="comma-separated n values")
    sp.add_argument("--improvement", type=float, default=2.0)
    sp.add_argument("--shrink", type=float, default=0.1)
    common(sp, seed=False)
    sp.set_defaults(func=cmd_check_conditions)

    def mc(name, func, helptext, model=True):
        sp = sub.add_parser(name, help=helptext)
        if model:
            sp.add_argument("--model", required=True)
        sp.add_argument("--n", type=int, required=True)
        sp.add_argument("--k", type=int)
        sp.add_argument("--k-rule")
        sp.add_argument("--grid", required=model)
        sp.add_argument("--reps", type=int, required=True)
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--method", choices=(SPACINGS, FULL), default=SPACINGS)
        sp.add_argument("--csv", help="also write per-point CSV here")
        common(sp)
        sp.set_defaults(func=func)
        return sp

    sp = mc("mc-normality", cmd_mc_normality, "KS normality of kappa* per grid point")
    sp.add_argument("--measure", help="measure.json for the integral-estimator z check")
    sp.add_argument("--uniform-measure", action="store_true", help="use uniform weights on the grid")
    mc("mc-covariance", cmd_mc_covariance, "empirical covariance of kappa* vs kernel")
    sp = mc("mc-lemma1", cmd_mc_lemma1, "uniform tail statistic vs min(s,t)", model=False)
    sp.add_argument("--s", help="comma-separated levels in (0, 1]")

    sp = sub.add_parser("mc-modulus", help="continuity-modulus sup ratios on limit paths")
    sp.add_argument("--K", type=float, required=True)
    sp.add_argument("--grid", required=True)
    sp.add_argument("--paths", type=int, required=True)
    sp.add_argument("--h", required=True, help="comma-separated h values")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--csv")
    common(sp)
    sp.set_defaults(func=cmd_mc_modulus)
    return p


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except NumericalError as exc:
        return _fail(exc.kind, str(exc), 3)
    except (ValueError, KeyError, OSError) as exc:
        return _fail("validation", str(exc), 2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
