"""Command-line entry point: ``bordatopk <subcommand> [options]``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import bounds as bd
from .aggregation import (
    ESTIMATORS,
    borda_tally,
    estimate_top_k,
    normalized_borda_tally,
    parse_beta,
    score_family,
)
from .core import rng_from
from .experiments import ExperimentConfig, ModelSpec, canonical_estimator, sweep, w1, w2
from .formats import float_list, parse_batch, parse_key_values, parse_model, tally_csv
from .models import associated_scores, build_adversarial, delta_gap, random_explicit_model, true_top_k
from .preflib import RealDataConfig, parse_preflib_soc, real_data_experiment


def _write(path: Optional[str], text: str) -> None:
    if path:
        Path(path).write_text(text)


def _emit(args, lines: List[str]) -> None:
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    _write(args.out, text)


def _items(items) -> str:
    return ",".join(str(i + 1) for i in sorted(items))


# -- subcommands --------------------------------------------------------------


def cmd_aggregate(args) -> None:
    batch = parse_batch(Path(args.batch).read_text())
    beta = parse_beta(args.beta, batch.m)
    estimator = canonical_estimator(args.estimator)
    selection = estimate_top_k(batch, beta, args.k, estimator)
    print(_items(selection.items))
    if selection.tie_broken:
        print("# tie at the k-th position broken toward lower indices", file=sys.stderr)
    if args.out and estimator != "spectral":
        tally = (borda_tally if estimator == "borda" else normalized_borda_tally)(batch, beta)
        _write(args.out, tally_csv(tally))


def cmd_bounds(args) -> None:
    beta = parse_beta(args.beta, args.m)
    if args.h:
        rep = bd.approx_bound_report(args.n, args.m, args.k, args.h, args.p, args.alpha, beta, r=args.r)
    else:
        rep = bd.bound_report(args.n, args.m, args.k, args.p, args.alpha, beta, r=args.r)
    _emit(args, [f"{key}={_value(val)}" for key, val in bd.report_dict(rep).items()])


def _value(val) -> str:
    if val is None:
        return ""
    return repr(val) if isinstance(val, float) else str(val)


def cmd_gap_curve(args) -> None:
    m_max = args.m_max if args.m_max is not None else args.n - args.k
    rows = bd.bound_gap_curve(args.n, args.k, args.p, args.beta, range(args.m_min, m_max + 1))
    text = bd.rows_to_csv(rows)
    sys.stdout.write(text)
    _write(args.out, text)


def _weights(spec: str, n: int) -> np.ndarray:
    if spec == "w1":
        return w1(n)
    if spec == "w2":
        return w2(n)
    values = np.array(float_list(spec))
    if len(values) != n:
        raise ValueError(f"{len(values)} weights given for n={n}")
    return values


_SIM_KEYS = {"n", "m", "k", "r", "p_grid", "model", "weights", "sigma", "beta", "estimators",
             "trials", "runs", "seed", "hamming_h"}


def cmd_simulate(args) -> None:
    settings = {"model": "PL", "weights": "w1", "sigma": "0", "beta": "bar1",
                "estimators": ",".join(ESTIMATORS), "trials": "50", "runs": "20", "seed": "0"}
    if args.config:
        parsed = parse_key_values(Path(args.config).read_text())
        unknown = set(parsed) - _SIM_KEYS
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        settings.update(parsed)
    for key in _SIM_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = str(value)
    missing = [key for key in ("n", "m", "k", "r", "p_grid") if key not in settings]
    if missing:
        raise ValueError(f"missing settings: {missing}")
    n = int(settings["n"])
    spec = ModelSpec(settings["model"], tuple(_weights(settings["weights"], n)), float(settings["sigma"]))
    config = ExperimentConfig(
        n=n, m=int(settings["m"]), k=int(settings["k"]), r=int(settings["r"]),
        p_grid=float_list(settings["p_grid"]), model_spec=spec, beta_spec=settings["beta"],
        estimators=tuple(e for e in settings["estimators"].replace(",", " ").split()),
        trials_per_point=int(settings["trials"]), runs=int(settings["runs"]),
        root_seed=int(settings["seed"]),
        hamming_h=int(settings["hamming_h"]) if settings.get("hamming_h") else None,
    )
    result = sweep(config)
    aggregate = result.aggregate_csv()
    sys.stdout.write(aggregate)
    _write(args.out, result.raw_csv())
    _write(args.aggregate_out, aggregate)


def cmd_preflib(args) -> None:
    dataset = parse_preflib_soc(Path(args.file).read_text())
    config = RealDataConfig(
        m=args.m, k=args.k, batch_sizes=[int(b) for b in float_list(args.batch_sizes)],
        beta_spec=args.beta, trials=args.trials, runs=args.runs, root_seed=args.seed or 0,
    )
    result = real_data_experiment(dataset, config)
    aggregate = result.aggregate_csv()
    sys.stdout.write(aggregate)
    _write(args.out, result.raw_csv())
    _write(args.aggregate_out, aggregate)
    if args.ground_truth_out:
        names = [dataset.item_names[i] for i in result.truth.ranking]
        _write(args.ground_truth_out, ",".join(names) + "\n")


def cmd_kl_check(args) -> None:
    model_a = build_adversarial(args.n, args.m, args.k, args.delta, args.a - 1)
    model_b = build_adversarial(args.n, args.m, args.k, args.delta, args.b - 1)
    exact = bd.exact_kl_between(model_a, model_b, args.r, args.p)
    _, _, h = bd.gh_parameters(args.n, args.m, args.k, score_family("bar1", args.m))
    bound = bd.kl_bound(args.r, args.p, float(h), args.delta)
    _emit(args, [f"kl={exact!r}", f"bound={bound!r}", f"pass={exact <= bound}"])


def cmd_variance_check(args) -> None:
    if args.model:
        model = parse_model(Path(args.model).read_text())
    else:
        model = random_explicit_model(args.n, args.m, rng_from(args.seed or 0))
    beta = parse_beta(args.beta, model.m)
    scores = associated_scores(model, beta)
    top = true_top_k(scores, args.k)
    tau = scores.tau
    inside = sorted(top.items)
    outside = [i for i in range(model.n) if i not in top.items]
    a = max(inside, key=lambda i: tau[i])
    b = min(outside, key=lambda i: tau[i])
    var = bd.exact_variance_sum(model, beta, a, b, args.p)
    bound = bd.variance_bound(model.n, model.m, args.p, delta_gap(scores, args.k))
    _emit(args, [f"a={a + 1}", f"b={b + 1}", f"variance={var!r}", f"bound={bound!r}",
                 f"pass={var <= bound + 1e-12}"])


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bordatopk", description="Top-k selection via Borda counting.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--seed", type=int, help="root seed (default 0)")
        p.add_argument("--out", help="output file")
        return p

    p = add("aggregate", cmd_aggregate, "top-k of an observation batch file")
    p.add_argument("--batch", required=True)
    p.add_argument("--beta", default="bar1", help="family name or comma-separated scores")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--estimator", default="borda", help="borda | normalized | spectral")

    p = add("bounds", cmd_bounds, "closed-form error bounds and converse parameters")
    for name in ("n", "m", "k"):
        p.add_argument(f"--{name}", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", default="bar1")
    p.add_argument("--r", type=int)
    p.add_argument("--h", type=int, default=0, help="Hamming radius for approximate selection")

    p = add("gap-curve", cmd_gap_curve, "upper vs converse alpha as m varies (CSV)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--beta", default="bar1", help="score family name")
    p.add_argument("--m-min", type=int, default=2)
    p.add_argument("--m-max", type=int)

    p = add("simulate", cmd_simulate, "Monte Carlo sweep over p (raw CSV to --out)")
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--aggregate-out")
    for name in ("n", "m", "k", "r", "trials", "runs"):
        p.add_argument(f"--{name}", type=int)
    p.add_argument("--hamming-h", dest="hamming_h", type=int)
    p.add_argument("--p-grid", dest="p_grid", help="comma-separated probabilities")
    p.add_argument("--model", choices=["PL", "NoisyPL"])
    p.add_argument("--weights", help="w1, w2 or a comma-separated list")
    p.add_argument("--sigma", type=float)
    p.add_argument("--beta")
    p.add_argument("--estimators", help="comma-separated subset of borda,normalized,spectral")

    p = add("preflib", cmd_preflib, "mini-batch experiment on a complete-order preference file")
    p.add_argument("--file", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--batch-sizes", required=True, help="comma-separated")
    p.add_argument("--beta", default="bar1")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--aggregate-out")
    p.add_argument("--ground-truth-out")

    p = add("kl-check", cmd_kl_check, "exact KL between two adversarial models vs its bound")
    for name in ("n", "m", "k", "r"):
        p.add_argument(f"--{name}", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--a", type=int, required=True, help="1-indexed top item of the first model")
    p.add_argument("--b", type=int, required=True, help="1-indexed top item of the second model")

    p = add("variance-check", cmd_variance_check, "exact variance of X_a - X_b vs its bound")
    p.add_argument("--model", help="model file; otherwise a random model from --seed")
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--beta", default="bar1")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args.func(args)
    except (ValueError, OSError, OverflowError, RuntimeError) as exc:
        print(f"bordatopk {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
