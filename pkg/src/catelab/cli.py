"""Command-line entry points tying the modules into reproducible experiments.

Every subcommand writes a CSV whose header lines echo the full flag
configuration, so any output file documents exactly how to regenerate itself.
Configuration is flags-only by design.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .dgp import BUILTIN_SIM_IDS, builtin_spec, draw_dataset
from .errors import CatelabError, InvalidDataError
from .evaluation import ci_simulation
from .experiments import RATE_EXPERIMENTS, rate_experiment
from .inference import ci_normal
from .io import (
    header_lines,
    read_dataset_csv,
    write_coverage_csv,
    write_intervals_csv,
    write_rate_csv,
    write_records_csv,
)
from .learners import Forest, ForestParams, GivenPropensity
from .meta import fit_t, parse_learner_spec
from .rng import derive_seed

_VALID_LEARNER_HELP = (
    "learner specs are <meta>-<base> with meta in {s,t,x,f,u} and base in "
    "{rf,ols,ols0,knn,mean}, plus per-slot overrides like x-rf:tau=ols"
)


@dataclass(frozen=True)
class RunConfig:
    """Echo of the parsed flags; serialized verbatim into output headers."""

    subcommand: str
    sim: int | None = None
    data: str | None = None
    learners: str | None = None
    n: str | None = None
    reps: int | None = None
    b: int | None = None
    alpha: float | None = None
    seed: int = 0
    threads: int = 1
    out: str = "-"
    experiment: str | None = None
    d: int | None = None
    sigma: float | None = None
    lipschitz: float | None = None
    test_size: int | None = None
    train_size: int | None = None
    trees: int | None = None
    min_leaf: int | None = None
    truth: str | None = None

    def headers(self) -> list[str]:
        items = {k: v for k, v in asdict(self).items() if v is not None}
        return header_lines(items)


def _int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}") from exc


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="catelab",
        description="Treatment-effect meta-learner experiments and estimation.",
    )
    parser.add_argument("--version", action="version", version=f"catelab {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    sim = sub.add_parser("simulate", help="replicate a benchmark simulation")
    sim.add_argument("--sim", type=int, required=True, help="simulation id 1..6")
    sim.add_argument("--learners", required=True, help=_VALID_LEARNER_HELP)
    sim.add_argument("--n", type=_int_list, required=True, help="training sizes, comma separated")
    sim.add_argument("--reps", type=int, default=30)
    sim.add_argument("--test-size", type=int, default=10_000)
    sim.add_argument("--trees", type=int, default=100)
    sim.add_argument("--min-leaf", type=int, default=5)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--threads", type=int, default=1)
    sim.add_argument("--out", required=True)

    rates = sub.add_parser("rates", help="run a named convergence-rate experiment")
    rates.add_argument("--experiment", required=True, help=f"one of {', '.join(RATE_EXPERIMENTS)}")
    rates.add_argument("--n", type=_int_list, default=None, help="treated-arm size grid")
    rates.add_argument("--reps", type=int, default=20)
    rates.add_argument("--test-size", type=int, default=10_000)
    rates.add_argument("--d", type=int, default=None)
    rates.add_argument("--sigma", type=float, default=1.0, help="noise standard deviation")
    rates.add_argument("--lipschitz", type=float, default=1.0, help="smoothness constant")
    rates.add_argument("--seed", type=int, default=0)
    rates.add_argument("--threads", type=int, default=1)
    rates.add_argument("--out", required=True)

    est = sub.add_parser("estimate", help="fit a learner on a CSV and emit effect intervals")
    est.add_argument("--data", required=True, help="input CSV with header x1..xd,w,y")
    est.add_argument("--learners", required=True, help=_VALID_LEARNER_HELP)
    est.add_argument("--b", type=int, default=1000, help="bootstrap replicates")
    est.add_argument("--alpha", type=float, default=0.05)
    est.add_argument("--trees", type=int, default=100)
    est.add_argument("--min-leaf", type=int, default=5)
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--threads", type=int, default=1)
    est.add_argument("--out", required=True)

    cov = sub.add_parser("coverage", help="interval coverage study on a benchmark simulation")
    cov.add_argument("--sim", type=int, required=True)
    cov.add_argument("--learners", required=True, help=_VALID_LEARNER_HELP)
    cov.add_argument("--n", type=_int_list, required=True, help="pool size to draw")
    cov.add_argument("--train-size", type=int, required=True)
    cov.add_argument("--test-size", type=int, required=True)
    cov.add_argument("--reps", type=int, default=1)
    cov.add_argument("--b", type=int, default=1000)
    cov.add_argument("--alpha", type=float, default=0.05)
    cov.add_argument("--truth", choices=("exact", "fitted"), default="exact",
                     help="adopt the exact effect or a fitted two-model estimate as truth")
    cov.add_argument("--trees", type=int, default=100)
    cov.add_argument("--min-leaf", type=int, default=5)
    cov.add_argument("--seed", type=int, default=0)
    cov.add_argument("--threads", type=int, default=1)
    cov.add_argument("--out", required=True)
    return parser


def _parse_learners(parser, args, propensity=None):
    params = ForestParams(n_trees=args.trees, min_leaf=args.min_leaf, seed=args.seed)
    try:
        return [
            parse_learner_spec(tok, forest_params=params, propensity=propensity)
            for tok in args.learners.split(",")
            if tok.strip()
        ]
    except InvalidDataError as exc:
        parser.error(f"{exc}; {_VALID_LEARNER_HELP}")


def _cmd_simulate(parser, args) -> int:
    if args.sim not in BUILTIN_SIM_IDS:
        parser.error(f"--sim must be one of {list(BUILTIN_SIM_IDS)}, got {args.sim}")
    config = RunConfig(
        subcommand="simulate", sim=args.sim, learners=args.learners,
        n=",".join(map(str, args.n)), reps=args.reps, seed=args.seed,
        threads=args.threads, out=args.out, test_size=args.test_size,
        trees=args.trees, min_leaf=args.min_leaf,
    )
    spec = builtin_spec(args.sim)
    prop = (
        GivenPropensity(spec.constant_propensity)
        if spec.constant_propensity is not None
        else None
    )
    learners = _parse_learners(parser, args, propensity=prop)

    from .evaluation import run_replications

    records = run_replications(
        spec, learners, args.n, reps=args.reps, test_size=args.test_size,
        base_seed=args.seed, threads=args.threads,
    )
    write_records_csv(args.out, records, config.headers())
    print(f"wrote {len(records)} records to {args.out}")
    for learner in learners:
        mses = [r.mse for r in records if r.learner == learner.name and not r.failed]
        mean = float(np.mean(mses)) if mses else float("nan")
        print(f"  {learner.name}: mean mse {mean:.6g} over {len(mses)} replications")
    n_failed = sum(r.failed for r in records)
    if n_failed:
        print(f"  WARNING: {n_failed} replicate fits failed", file=sys.stderr)
        return 1
    return 0


def _cmd_rates(parser, args) -> int:
    if args.experiment not in RATE_EXPERIMENTS:
        parser.error(
            f"--experiment must be one of {', '.join(RATE_EXPERIMENTS)}, got {args.experiment!r}"
        )
    if args.n is not None and len(args.n) < 2:
        parser.error("--n needs at least 2 sizes for a rate fit")
    config = RunConfig(
        subcommand="rates", experiment=args.experiment,
        n=None if args.n is None else ",".join(map(str, args.n)),
        reps=args.reps, seed=args.seed, threads=args.threads, out=args.out,
        d=args.d, sigma=args.sigma, lipschitz=args.lipschitz, test_size=args.test_size,
    )
    result = rate_experiment(
        args.experiment, n_grid=args.n, reps=args.reps, test_size=args.test_size,
        seed=args.seed, d=args.d, L=args.lipschitz, sd=args.sigma, threads=args.threads,
    )
    write_rate_csv(args.out, result.fits, result.experiment, config.headers())
    print(f"wrote rate summary to {args.out} (target slope {result.target_slope:+.3f})")
    for name, fit in result.fits.items():
        print(f"  {name}: slope {fit.slope:+.4f} (stderr {fit.slope_stderr:.4f})")
    return 0


def _cmd_estimate(parser, args) -> int:
    config = RunConfig(
        subcommand="estimate", data=args.data, learners=args.learners,
        b=args.b, alpha=args.alpha, seed=args.seed, threads=args.threads,
        out=args.out, trees=args.trees, min_leaf=args.min_leaf,
    )
    ds = read_dataset_csv(args.data)
    learners = _parse_learners(parser, args)
    entries = []
    for li, learner in enumerate(learners):
        intervals = ci_normal(
            ds, learner, ds.features, b=args.b, alpha=args.alpha,
            seed=derive_seed(args.seed, li),
        )
        entries.extend(
            (str(i), learner.name, "normal", iv) for i, iv in enumerate(intervals)
        )
    write_intervals_csv(args.out, entries, config.headers())
    print(f"wrote {len(entries)} interval rows to {args.out}")
    return 0


def _cmd_coverage(parser, args) -> int:
    if args.sim not in BUILTIN_SIM_IDS:
        parser.error(f"--sim must be one of {list(BUILTIN_SIM_IDS)}, got {args.sim}")
    pool_size = args.n[0]
    config = RunConfig(
        subcommand="coverage", sim=args.sim, learners=args.learners,
        n=str(pool_size), reps=args.reps, b=args.b, alpha=args.alpha,
        seed=args.seed, threads=args.threads, out=args.out,
        train_size=args.train_size, test_size=args.test_size, truth=args.truth,
    )
    spec = builtin_spec(args.sim)
    ds, gt = draw_dataset(spec, pool_size, seed=derive_seed(args.seed, 11))
    if args.truth == "exact":
        tau_truth = gt.tau
    else:
        params = ForestParams(n_trees=args.trees, min_leaf=args.min_leaf, seed=args.seed)
        truth_model = fit_t(ds, Forest(params), Forest(params))
        tau_truth = truth_model.predict(ds.features)
    prop = (
        GivenPropensity(spec.constant_propensity)
        if spec.constant_propensity is not None
        else None
    )
    learners = _parse_learners(parser, args, propensity=prop)
    rows = ci_simulation(
        ds, tau_truth, learners, train_size=args.train_size,
        test_size=args.test_size, seed=args.seed, b=args.b, alpha=args.alpha,
        reps=args.reps,
    )
    write_coverage_csv(args.out, rows, config.headers())
    print(f"wrote {len(rows)} coverage rows to {args.out}")
    for row in rows:
        print(
            f"  {row.learner}/{row.method}: coverage {row.coverage:.3f} "
            f"mean length {row.mean_length:.4f}"
        )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.subcommand == "simulate":
            return _cmd_simulate(parser, args)
        if args.subcommand == "rates":
            return _cmd_rates(parser, args)
        if args.subcommand == "estimate":
            return _cmd_estimate(parser, args)
        return _cmd_coverage(parser, args)
    except CatelabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
