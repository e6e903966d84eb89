"""Command-line front end.

Exit codes: 0 success, 1 runtime or verification failure, 2 usage or
validation error.  Set ``BPDECOMP_COLOR=1`` to colour verdicts in text
output.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

from . import estimator, model, simulator, stats
from .errors import (DegenerateSampleError, DomainError, InsufficientDataError,
                     ModelInapplicableError, ParseError, SimulationLimitError)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _color(text, code):
    if os.environ.get("BPDECOMP_COLOR", "") not in ("", "0"):
        return f"\033[{code}m{text}\033[0m"
    return text


def _kv(pairs):
    width = max(len(k) for k, _ in pairs)
    out = []
    for k, v in pairs:
        if isinstance(v, float):
            v = f"{v:.6g}"
        out.append(f"{k:<{width}}  {v}")
    return "\n".join(out) + "\n"


def _emit(args, pairs):
    if args.format == "json":
        return estimator.dumps(dict(pairs)) + "\n"
    if args.format == "csv":
        return "key,value\n" + "".join(f"{k},{estimator.dumps(v) if not isinstance(v, str) else v}\n"
                                       for k, v in pairs)
    return _kv(pairs)


def cmd_predict(args):
    lam = model.check_supercritical(args.lam)
    prof = model.extinction_probability(lam)
    tot = model.totals_random_horizon(lam)
    pairs = [
        ("lambda", lam),
        ("g_lambda", prof.g_lambda),
        ("k_max", prof.k_max),
        ("k_bar", tot.n_fixed),
        ("e_t_fixed", tot.mean_fixed),
        ("sd_fixed", tot.sd_fixed),
        ("e_t_random", tot.mean_random),
        ("sd_random", tot.sd_random),
        ("alpha", prof.alpha),
        ("gamma", prof.gamma),
    ]
    return _emit(args, pairs), EXIT_OK


def _load(args):
    if not args.input:
        raise UsageError("--input is required")
    path = Path(args.input)
    if not path.is_file():
        raise UsageError(f"input file not found: {path}")
    return stats.read_histogram(path)


def _fit_pairs(hist, rep):
    pairs = [
        ("n", rep.n),
        ("total_elements", rep.total_elements),
        ("lambda_hat", rep.lambda_hat),
        ("sample_std", rep.sample_std),
        ("confidence", rep.confidence),
        ("ci_low", rep.ci_low),
        ("ci_high", rep.ci_high),
    ]
    if rep.gof is None:
        pairs.append(("gof", "insufficient data"))
    else:
        g = rep.gof
        pairs += [
            ("gof_statistic", g.statistic),
            ("gof_df", g.df),
            ("gof_p_value", g.p_value),
            ("gof_bins", stats.describe_bins(g.bins)),
            ("gof_rejected", g.rejected),
        ]
    return pairs


def cmd_fit(args):
    hist = _load(args)
    rep = stats.fit(hist, args.confidence, args.significance)
    return _emit(args, _fit_pairs(hist, rep)), EXIT_OK


def cmd_estimate(args):
    hist = _load(args)
    rep = stats.fit(hist, args.confidence, args.significance)
    est = estimator.estimate_project(rep)
    pairs = _fit_pairs(hist, rep) + [
        ("k_max", est.k_max),
        ("horizon_expected", est.horizon_expected),
        ("horizon_range", f"{est.horizon_range[0]}-{est.horizon_range[1]}"),
        ("expected_elements", est.expected_elements),
        ("lower_bound", est.lower_bound),
        ("upper_bound", est.upper_bound),
        ("observed_inside_band", est.contains(hist.total_elements)),
    ]
    return _emit(args, pairs), EXIT_OK


def cmd_simulate(args):
    lam = model.check_supercritical(args.lam)
    if args.export_tree:
        tree = simulator.simulate_tree(lam, args.seed, args.depth_cap)
        return simulator.export_tree(tree, args.export_tree), EXIT_OK
    s = simulator.run_study(lam, args.replicates, args.depth_cap, args.seed,
                            workers=args.workers)
    prof = model.extinction_probability(lam)
    pairs = [
        ("lambda", lam),
        ("replicates", s.replicates),
        ("seed", args.seed),
        ("depth_cap", s.depth_cap),
        ("extinction_depth", s.extinction_depth),
        ("extinction_frequency", s.extinction_frequency),
        ("extinction_se", s.extinction_se),
        ("alpha", prof.alpha),
        ("mean_truncated_total", s.totals.mean),
        ("mean_truncated_total_se", s.totals.mean_se),
        ("e_t_fixed", model.expected_total_fixed(lam, s.depth_cap)),
        ("var_truncated_total", s.totals.var),
        ("var_truncated_total_se", s.totals.var_se),
        ("d_t_fixed", model.variance_total_fixed(lam, s.depth_cap)),
    ]
    for n in sorted(s.cond_mass):
        est, se = s.cond_mass_estimate(n)
        pairs += [(f"cond_mass_{n}", est), (f"cond_mass_{n}_se", se),
                  (f"cond_mass_{n}_exact", model.conditioned_extinction_mass(lam, n))]
    return _emit(args, pairs), EXIT_OK


def cmd_sweep(args):
    rows = estimator.sweep(args.min, args.max, args.step, args.budget)
    text = estimator.sweep_csv(rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        return f"wrote {len(rows)} rows to {args.out}\n", EXIT_OK
    return text, EXIT_OK


def cmd_verify(args):
    rows = estimator.verify_bundled(args.confidence, args.significance)
    ok = all(r.inside for r in rows)
    if args.format == "json":
        text = estimator.verification_json(rows) + "\n"
    else:
        text = estimator.verification_table(rows)
        text = text.replace("OUTSIDE band", _color("OUTSIDE band", "31"))
        text = text.replace("inside band", _color("inside band", "32"))
        text += "all observed totals inside their model bands\n" if ok else \
            "verification FAILED: some observed totals fall outside their bands\n"
    return text, EXIT_OK if ok else EXIT_FAIL


def _probability(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"{text} is not in (0, 1)")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"{text} is not a positive integer")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="bpdecomp",
                                description="Branching-process model of business-process decomposition.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json", "csv"), default="text")
    common.add_argument("--confidence", type=_probability, default=0.95)
    common.add_argument("--significance", type=_probability, default=0.05)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("predict", parents=[common], help="closed-form predictions for one lambda")
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.set_defaults(func=cmd_predict)

    for name, func, text in (("fit", cmd_fit, "fit lambda to a size histogram"),
                             ("estimate", cmd_estimate, "fit and estimate project size")):
        s = sub.add_parser(name, parents=[common], help=text)
        s.add_argument("--input", required=True, help="size,count CSV or one size per line")
        s.set_defaults(func=func)

    s = sub.add_parser("simulate", parents=[common], help="Monte-Carlo study or a sample tree")
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--replicates", type=_positive_int, default=100_000)
    s.add_argument("--depth-cap", type=_positive_int, default=3)
    s.add_argument("--workers", type=_positive_int, default=1)
    s.add_argument("--export-tree", choices=("json", "dot"),
                   help="print the tree of --seed instead of running a study")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="figure-curve data as CSV")
    s.add_argument("--min", type=float, required=True)
    s.add_argument("--max", type=float, required=True)
    s.add_argument("--step", type=float, required=True)
    s.add_argument("--budget", type=float, default=1000.0,
                   help="element budget T for the resource-limited depth column")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("verify", parents=[common], help="check the bundled projects against the model")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        text, code = args.func(args)
    except ModelInapplicableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, ParseError, DomainError, DegenerateSampleError,
            InsufficientDataError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SimulationLimitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
