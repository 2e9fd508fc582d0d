"""Command-line front end.

    restartlab analyze family=gp sigma=1 k=0.5
    restartlab optimal family=weibull a=1 k=0.5 --json
    restartlab region --sigma 0.1:3:291 --p 0.0001:0.9999:2000 --out region.csv
    restartlab curve family=lognormal mu=1 sigma=0.7 --p 0.01:0.99:99 --out curve.csv
    restartlab simulate family=gp sigma=1 k=0 --policy fixed:0.5
    restartlab compare family=lognormal mu=0 sigma=2 --policy none --policy optimal --seed 42

Exit codes: 0 success, 2 invalid input or unwritable output, 3 when
restarts cannot improve on the unrestarted mean.  Relative ``--out``
paths are resolved against ``$RESTARTLAB_OUTPUT_DIR`` when it is set.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .analysis import (
    NoImprovementError,
    Status,
    curve_to_csv,
    json_float,
    optimal_restart,
    region_scan,
    restarted_mean_curve,
    usefulness_verdict,
)
from .distributions import Distribution, DomainError, SpecError
from .simulation import (
    FixedCutoff,
    InvalidCutoffError,
    SimulationConfig,
    compare_policies,
    parse_policy,
)

OUTPUT_DIR_ENV = "RESTARTLAB_OUTPUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_NO_IMPROVEMENT = 0, 2, 3


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """Six significant digits for human-readable output."""
    if x is None:
        return "-"
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.6g}"


def short_label(label: str) -> str:
    name, _, arg = label.partition(":")
    return f"{name}:{fmt(arg)}" if arg else name


def parse_range(text: str, what: str, *, lo_min=None, lo_open=True, hi_max=None, hi_open=True):
    """``lo:hi:n`` -> ``np.linspace(lo, hi, n)`` with bounds checks."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"{what}: expected lo:hi:n, got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
        n = int(parts[2])
    except ValueError:
        raise UsageError(f"{what}: expected lo:hi:n, got {text!r}") from None
    if n < 1:
        raise UsageError(f"{what}: empty range (n={n})")
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo or (n > 1 and hi == lo):
        raise UsageError(f"{what}: need finite lo < hi, got {text!r}")
    if n == 1 and hi != lo:
        raise UsageError(f"{what}: a single point needs lo == hi")
    if lo_min is not None and (lo < lo_min or (lo_open and lo == lo_min)):
        raise UsageError(f"{what}: lower end {lo!r} out of range")
    if hi_max is not None and (hi > hi_max or (hi_open and hi == hi_max)):
        raise UsageError(f"{what}: upper end {hi!r} out of range")
    return np.linspace(lo, hi, n)


def parse_dist(tokens) -> Distribution:
    if not tokens:
        raise UsageError("missing distribution spec (e.g. family=lognormal mu=0 sigma=1)")
    if tokens[0].lstrip().startswith("{"):
        return Distribution.from_spec(" ".join(tokens))
    return Distribution.from_spec(tokens)


def resolve_out(path: str) -> Path:
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def write_text(path: str, text: str) -> Path:
    p = resolve_out(path)
    try:
        with open(p, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {p}: {exc.strerror or exc}") from None
    return p


def emit_json(obj) -> None:
    print(json.dumps(obj, indent=2, allow_nan=False))


# --------------------------------------------------------------------------
# commands


def cmd_analyze(args) -> int:
    d = parse_dist(args.dist)
    if args.grid < 2:
        raise UsageError("--grid must be at least 2")
    grid = np.linspace(1e-4, 1 - 1e-4, args.grid)
    v = usefulness_verdict(d, grid)
    if args.json:
        emit_json({"distribution": d.to_dict(), "grid_size": args.grid, **v.to_dict()})
        return EXIT_OK
    print(f"distribution: {d.to_spec()}")
    print(f"status: {v.status.value}")
    if v.witness_p is not None:
        print(f"witness p: {fmt(v.witness_p)} (1 - p = {fmt(v.witness_tail)})")
    if v.useful_intervals:
        spans = ", ".join(f"[{fmt(a)}, {fmt(b)}]" for a, b in v.useful_intervals)
        print(f"useful intervals: {spans}")
    if v.status is Status.NOT_USEFUL:
        print(f"note: checked {args.grid} points in [1e-4, 1 - 1e-4]; a useful cut-off "
              "may still exist closer to p = 1 than this resolution")
    if v.status is Status.INFINITE_MEAN:
        print("note: the unrestarted mean is infinite, so any finite restarted mean is an improvement")
    return EXIT_OK


def cmd_optimal(args) -> int:
    d = parse_dist(args.dist)
    try:
        opt = optimal_restart(d)
    except NoImprovementError as exc:
        print(f"no improvement: {exc}", file=sys.stderr)
        return EXIT_NO_IMPROVEMENT
    if args.json:
        emit_json({"distribution": d.to_dict(), **opt.to_dict()})
        return EXIT_OK
    print(f"distribution: {d.to_spec()}")
    print("p*: " + ("p*→0 (boundary)" if opt.boundary_case else fmt(opt.p_star)))
    print(f"t*: {fmt(opt.t_star)}")
    print(f"expected runtime at optimum: {fmt(opt.expected_runtime)}")
    print(f"unrestarted mean: {fmt(opt.mean)}")
    print(f"speedup: {fmt(opt.speedup)}" + ("x" if math.isfinite(opt.speedup) else ""))
    return EXIT_OK


def cmd_region(args) -> int:
    sig = parse_range(args.sigma, "--sigma", lo_min=0.0)
    ps = parse_range(args.p, "--p", lo_min=0.0, hi_max=1.0)
    scan = region_scan(sig, ps)
    out = write_text(args.out, scan.to_csv()) if args.out else None
    best = scan.smallest_useful_shape()
    if args.json:
        emit_json({"smallest_useful_sigma": best, "sigma_points": int(sig.size),
                   "p_points": int(ps.size), "useful_cells": int(scan.useful.sum()),
                   "out": str(out) if out else None})
        return EXIT_OK
    print("smallest useful sigma: " + (fmt(best) if best is not None else "none on this grid"))
    print(f"useful cells: {int(scan.useful.sum())} of {scan.useful.size}")
    if out:
        print(f"wrote {out}")
    return EXIT_OK


def cmd_curve(args) -> int:
    d = parse_dist(args.dist)
    ps = parse_range(args.p, "--p", lo_min=0.0, lo_open=False, hi_max=1.0)
    curve = restarted_mean_curve(d, ps)
    mean = d.mean()
    text = curve_to_csv(curve, mean)
    if not args.out:
        sys.stdout.write(text)
        return EXIT_OK
    out = write_text(args.out, text)
    if args.json:
        emit_json({"distribution": d.to_dict(), "points": len(curve), "mean": json_float(mean),
                   "out": str(out)})
    else:
        print(f"wrote {len(curve)} points to {out}")
    return EXIT_OK


def _resolve_policies(d: Distribution, texts):
    policies = []
    for text in texts or ["none"]:
        try:
            pol = parse_policy(text)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if pol == "optimal":
            opt = optimal_restart(d)
            if opt.boundary_case:
                raise UsageError("the optimal cut-off is the p*→0 boundary, which cannot be "
                                 "simulated; pass fixed:T with a small T instead")
            pol = FixedCutoff(opt.t_star)
        policies.append(pol)
    return policies


def cmd_simulate(args) -> int:
    d = parse_dist(args.dist)
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")
    if args.budget is not None and not args.budget > 0:
        raise UsageError("--budget must be > 0")
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    if args.command == "simulate" and len(args.policy or []) > 1:
        raise UsageError("simulate takes one --policy; use compare for several")
    try:
        policies = _resolve_policies(d, args.policy)
    except NoImprovementError as exc:
        print(f"no improvement: {exc}", file=sys.stderr)
        return EXIT_NO_IMPROVEMENT
    cfg = SimulationConfig(args.seed, args.reps, args.budget, workers=args.workers)
    try:
        results = compare_policies(d, policies, cfg)
    except InvalidCutoffError as exc:
        raise UsageError(str(exc)) from None
    payload = {"distribution": d.to_dict(), "seed": args.seed, "results": [r.to_dict() for r in results]}
    if args.out:
        write_text(args.out, json.dumps(payload, indent=2, allow_nan=False) + "\n")
    if args.json:
        emit_json(payload)
        return EXIT_OK
    print(f"distribution: {d.to_spec()}")
    print(f"seed {args.seed}, {args.reps} replications, generator {results[0].generator}")
    header = f"{'policy':<20} {'mean':>12} {'std err':>12} {'analytic':>12} {'restarts':>10} {'censored':>9}"
    print(header)
    for r in results:
        print(f"{short_label(r.policy):<20} {fmt(r.empirical_mean):>12} {fmt(r.std_error):>12} "
              f"{fmt(r.analytic):>12} {r.total_restarts:>10} {r.censored_count:>9}")
    if any(r.censored_count for r in results):
        print(f"note: censored replications exceeded the time budget {fmt(results[0].budget)} "
              "and are excluded from the mean")
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="restartlab",
                                     description="Restart analysis for runtime distributions.")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_dist(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("dist", nargs="+", metavar="KEY=VALUE",
                       help="distribution spec, e.g. family=lognormal mu=0 sigma=1, or a JSON object")
        p.add_argument("--json", action="store_true", help="machine-readable output")
        return p

    p = with_dist("analyze", "usefulness verdict over a p-grid")
    p.add_argument("--grid", type=int, default=2000, help="number of grid points (default 2000)")
    p.set_defaults(func=cmd_analyze)

    p = with_dist("optimal", "optimal restart quantile and expected runtime")
    p.set_defaults(func=cmd_optimal)

    p = sub.add_parser("region", help="log-normal usefulness region over (sigma, p)")
    p.add_argument("--sigma", default="0.1:3:291", help="lo:hi:n (default 0.1:3:291)")
    p.add_argument("--p", default="0.0001:0.9999:2000", help="lo:hi:m (default 0.0001:0.9999:2000)")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_region)

    p = with_dist("curve", "restarted expected runtime as a function of p")
    p.add_argument("--p", default="0.001:0.999:999", help="lo:hi:m (default 0.001:0.999:999)")
    p.add_argument("--out", help="CSV output path (stdout if omitted)")
    p.set_defaults(func=cmd_curve)

    for name, help_ in (("simulate", "Monte Carlo run of one policy"),
                        ("compare", "Monte Carlo comparison of several policies")):
        p = with_dist(name, help_)
        p.add_argument("--policy", action="append",
                       help="none | fixed:T | luby:B | optimal (repeatable for compare)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--reps", type=int, default=100_000)
        p.add_argument("--budget", type=float, default=None,
                       help="per-replication time budget (default 1e6 * median)")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", help="write the JSON result to this path")
        p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, SpecError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
