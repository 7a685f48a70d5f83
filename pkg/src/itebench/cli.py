"""Command-line front end.

Subcommands: ``bench`` (grid file -> CSV and optional SVG charts),
``probe`` (triviality table for one method), ``orders`` (stochastic-order
report for a two-column score file), ``rate`` (coverage-error decay along
a sample-size grid), ``gen`` (dump one dataset draw as CSV).

Exit codes: 0 on success, 1 on usage errors, 2 on runtime failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .bench import build_method, emit_csv, emit_plot, parse_grid, run_experiment
from .conformal import MethodConfig
from .dgp import (
    CovariateDesign,
    OutcomeModel,
    PropensityRegime,
    ScenarioConfig,
    gen_dataset,
    propensity_eval,
    scenario_id,
)
from .hardness import triviality_probe
from .orders import (
    ScorePair,
    estimate_alpha_star,
    fosd_check,
    mcx_check,
    sosd_check,
)
from .split_pair import rate_experiment

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; this tool reserves 2 for runtime errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _scenario_from_flags(args) -> ScenarioConfig:
    return ScenarioConfig(
        covariates=CovariateDesign(kind=args.covariates),
        outcome=OutcomeModel(noise=args.noise, rho=args.rho),
        propensity=PropensityRegime(kind=args.regime, p=args.p),
        n_train=args.n_train,
        n_test=args.n_test,
        seed=args.seed,
    )


def _add_scenario_flags(sub) -> None:
    sub.add_argument("--regime", default="beta24",
                     choices=["beta24", "constant", "checkerboard"],
                     help="treatment-assignment regime")
    sub.add_argument("--p", type=float, default=0.5,
                     help="constant-regime propensity level")
    sub.add_argument("--rho", type=float, default=0.0,
                     help="potential-outcome error correlation")
    sub.add_argument("--noise", default="homoscedastic",
                     choices=["homoscedastic", "heteroscedastic"])
    sub.add_argument("--covariates", default="independent",
                     choices=["independent", "correlated"])


def _add_common(sub, reps_default: int) -> None:
    sub.add_argument("--seed", type=int, default=0, help="master seed")
    sub.add_argument("--reps", type=int, default=reps_default)
    sub.add_argument("--n-train", type=int, default=1000)
    sub.add_argument("--n-test", type=int, default=2000)
    sub.add_argument("--out", default=None, help="output path ('-' for stdout)")


def _build_parser() -> _Parser:
    parser = _Parser(prog="itebench",
                     description="effect-interval construction and stress tests")
    subs = parser.add_subparsers(dest="command", required=True)

    bench = subs.add_parser("bench", parents=[], help="run a benchmark grid")
    bench.add_argument("--grid", required=True, help="grid-file path")
    bench.add_argument("--out", default=None)
    bench.add_argument("--plot-dir", default=None,
                       help="directory for coverage/length SVG charts")
    bench.add_argument("--parallelism", type=int, default=1)
    bench.add_argument("--seed", type=int, default=None, help="override master seed")
    bench.add_argument("--reps", type=int, default=None)
    bench.add_argument("--n-train", type=int, default=None)
    bench.add_argument("--n-test", type=int, default=None)
    bench.add_argument("--propensity", choices=["estimated", "oracle"], default=None,
                       help="override every method's propensity mode")

    probe = subs.add_parser("probe", help="constant-effect containment table")
    probe.add_argument("--method", default="split_pair",
                       choices=["naive", "nested_inexact", "nested_exact",
                                "dr", "ipw", "split_pair"])
    probe.add_argument("--y-grid", default="-3,0,3",
                       help="comma-separated candidate effect values")
    probe.add_argument("--target", type=float, default=0.9)
    probe.add_argument("--propensity", choices=["estimated", "oracle"],
                       default="estimated")
    _add_common(probe, reps_default=5)
    _add_scenario_flags(probe)

    orders = subs.add_parser("orders", help="stochastic-order report for scores")
    orders.add_argument("--scores", required=True,
                        help="two-column text file: pseudo and oracle scores")
    orders.add_argument("--out", default=None)

    rate = subs.add_parser("rate", help="split-pair coverage-error decay")
    rate.add_argument("--n-grid", default="500,2000,8000")
    rate.add_argument("--target", type=float, default=0.9)
    rate.add_argument("--oracle-mu", action="store_true",
                      help="use the true outcome surfaces")
    _add_common(rate, reps_default=40)
    _add_scenario_flags(rate)
    rate.set_defaults(regime="constant")

    gen = subs.add_parser("gen", help="dump one dataset draw as CSV")
    _add_common(gen, reps_default=1)
    _add_scenario_flags(gen)

    return parser


def _cmd_bench(args) -> int:
    with open(args.grid) as fh:
        grid = parse_grid(fh.read())
    from dataclasses import replace
    if args.seed is not None:
        grid = replace(grid, master_seed=args.seed)
    if args.reps is not None:
        grid = replace(grid, reps=args.reps)
    if args.n_train is not None or args.n_test is not None:
        scenarios = tuple(
            replace(s,
                    n_train=args.n_train if args.n_train is not None else s.n_train,
                    n_test=args.n_test if args.n_test is not None else s.n_test)
            for s in grid.scenarios)
        grid = replace(grid, scenarios=scenarios)
    if args.propensity is not None:
        grid = replace(grid, methods=tuple(
            replace(m, propensity_mode=args.propensity) for m in grid.methods))
    summaries = run_experiment(grid, parallelism=args.parallelism)
    _write(emit_csv(summaries), args.out)
    failed = [s for s in summaries if s.error is not None]
    for s in failed:
        print(f"cell failed: {s.scenario}/{s.method}@{s.target:g}: {s.error}",
              file=sys.stderr)
    if args.plot_dir is not None:
        import os
        os.makedirs(args.plot_dir, exist_ok=True)
        emit_plot("coverage_vs_target", summaries,
                  out=f"{args.plot_dir}/coverage_vs_target.svg")
        emit_plot("length_vs_target", summaries,
                  out=f"{args.plot_dir}/length_vs_target.svg")
    return 0


def _cmd_probe(args) -> int:
    scenario = _scenario_from_flags(args)
    y_grid = [float(v) for v in args.y_grid.split(",")]

    def build(obs, seed):
        cfg = MethodConfig(method=args.method, alpha=1.0 - args.target,
                           propensity_mode=args.propensity, seed=seed)
        oracle = lambda x: propensity_eval(scenario.propensity, x)
        return build_method(obs, cfg, oracle_propensity=oracle)

    result = triviality_probe(build, scenario, y_grid, args.reps, args.seed)
    lines = ["y,containment"]
    for y, c in zip(result.y_grid, result.containment):
        lines.append(f"{y:.6f},{c:.6f}")
    _write("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_orders(args) -> int:
    data = np.loadtxt(args.scores, delimiter=None, ndmin=2)
    if data.shape[1] != 2:
        raise ValueError("score file must have exactly two columns")
    pair = ScorePair(pseudo=data[:, 0], oracle=data[:, 1])
    reports = [fosd_check(pair.pseudo, pair.oracle),
               sosd_check(pair.pseudo, pair.oracle),
               mcx_check(pair.pseudo, pair.oracle)]
    lines = ["relation,holds,max_violation,tolerance"]
    for r in reports:
        lines.append(f"{r.relation},{int(r.holds)},{r.max_violation:.6f},"
                     f"{r.tolerance:.6f}")
    lines.append(f"alpha_star,{estimate_alpha_star(pair):.6f},,")
    _write("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_rate(args) -> int:
    scenario = _scenario_from_flags(args)
    n_grid = [int(v) for v in args.n_grid.split(",")]
    points = rate_experiment(scenario, n_grid, reps=args.reps,
                             alpha=1.0 - args.target, master_seed=args.seed,
                             oracle_mu=args.oracle_mu)
    lines = ["n_train,m_mean,mean_abs_cov_error"]
    for pt in points:
        lines.append(f"{pt.n_train},{pt.m_mean:.6f},{pt.mean_abs_cov_error:.6f}")
    _write("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_gen(args) -> int:
    ds = gen_dataset(_scenario_from_flags(args))
    lines = [f"# scenario={scenario_id(ds.config)}", "x1,x2,t,y_obs,y1,y0"]
    for k in range(len(ds)):
        lines.append(f"{ds.x[k, 0]:.10g},{ds.x[k, 1]:.10g},{int(ds.t[k])},"
                     f"{ds.y_obs[k]:.10g},{ds.y1[k]:.10g},{ds.y0[k]:.10g}")
    _write("\n".join(lines) + "\n", args.out)
    return 0


_COMMANDS = {
    "bench": _cmd_bench,
    "probe": _cmd_probe,
    "orders": _cmd_orders,
    "rate": _cmd_rate,
    "gen": _cmd_gen,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except BrokenPipeError:
        return 0
    except Exception as exc:  # runtime failures map to exit 2
        print(f"itebench: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
