"""Command-line front end.

Subcommands: `analytic table|curve`, `simulate`, `oracle
exact|poissonized|height-dist`, `verify`. Every file-producing command
writes a JSON manifest next to its CSV; `simulate --from-manifest`
replays a manifest byte-identically. Exit codes: 0 success, 1
invariant/verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import analytic, oracle, report
from .lattice import UnsupportedConfigError
from .oracle import OracleBudgetError
from .simulate import RunConfig, run, set_threads

DEFAULT_SEED_ENV = "MLPARK_SEED"


class UsageError(Exception):
    pass


def _default_seed() -> int:
    return int(os.environ.get(DEFAULT_SEED_ENV, "0"))


def _emit(args, header, rows, command: str, parameters: dict) -> None:
    if args.out is None:
        sys.stdout.write(report.render_csv(header, rows))
    else:
        checksum = report.write_csv(args.out, header, rows)
        report.write_manifest(args.out, command, parameters, checksum)


def cmd_analytic_table(args) -> int:
    rows_out = []
    diags = analytic.limit_diagnostics(args.layers)
    for d in diags:
        num, den = analytic.end_density_unreduced(d.layer)
        rows_out.append(
            (
                d.layer,
                report.fmt_fraction(num, den),
                report.fmt_real(float(d.end_density)),
                report.fmt_real(float(d.gap_to_half)),
                report.fmt_real(float(d.term1)),
                report.fmt_real(float(d.term2)),
            )
        )
    header = ("layer", "end_density", "decimal", "gap_to_half", "term1", "term2")
    _emit(args, header, rows_out, "analytic table", {"layers": args.layers})
    if args.plot:
        report.plot_end_densities(
            [d.layer for d in diags],
            [float(d.end_density) for d in diags],
            _plot_path(args, "end_densities.png"),
        )
    return 0


def _parse_layers(spec: str) -> list[int]:
    try:
        layers = [int(v) for v in spec.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--layers: cannot parse {spec!r}")
    if not layers or any(l < 1 for l in layers):
        raise UsageError("--layers: need positive layer indices")
    return layers


def cmd_analytic_curve(args) -> int:
    layers = _parse_layers(args.layers)
    if args.t_max < 0 or args.t_step <= 0:
        raise UsageError("--t-max must be >= 0 and --t-step > 0")
    n_steps = int(round(args.t_max / args.t_step))
    t_grid = [i * args.t_step for i in range(n_steps + 1)]
    rows = []
    curves = {l: [] for l in layers}
    for layer in layers:
        for t in t_grid:
            v = analytic.density_time(layer, t)
            curves[layer].append(v)
            rows.append((layer, report.fmt_real(t), report.fmt_real(v)))
    header = ("layer", "t", "density")
    params = {"layers": layers, "t_max": args.t_max, "t_step": args.t_step}
    _emit(args, header, rows, "analytic curve", params)
    if args.plot:
        report.plot_density_curves(t_grid, curves, _plot_path(args, "density_curves.png"))
    return 0


def _plot_path(args, default_name: str) -> Path:
    if args.out is not None:
        return Path(args.out).with_suffix(".png")
    return Path(default_name)


def _config_from_args(args) -> RunConfig:
    if args.from_manifest:
        doc = report.read_manifest(args.from_manifest)
        return RunConfig.from_dict(doc["parameters"])
    if args.config:
        return RunConfig.from_file(args.config)
    if (args.arrivals is None) == (args.time is None):
        raise UsageError("exactly one of --arrivals or --time is required")
    mode = "fixed_arrivals" if args.arrivals is not None else "fixed_time"
    observe = None
    if args.observe:
        observe = tuple(int(v) for v in args.observe.split(",") if v.strip())
    return RunConfig(
        n_sites=args.sites,
        mode=mode,
        arrivals=args.arrivals,
        t=args.time,
        replications=args.reps,
        layers=args.layers,
        observe_sites=observe,
        seed=args.seed if args.seed is not None else _default_seed(),
        track_raise=args.raise_stats,
    )


def cmd_simulate(args) -> int:
    config = _config_from_args(args)
    set_threads(args.threads)
    result = run(config)
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    t_or_m = config.t if config.mode == "fixed_time" else config.arrivals
    rows = [
        (
            e.site,
            e.layer,
            report.fmt_real(e.mean),
            report.fmt_real(e.stderr),
            e.replications,
            config.mode,
            report.fmt_real(float(t_or_m)),
            config.seed,
        )
        for e in result.estimates
    ]
    header = ("site", "layer", "mean", "stderr", "replications", "mode", "t_or_M", "seed")
    out = args.out
    checksum = report.write_csv(out, header, rows)
    report.write_manifest(out, "simulate", config.to_dict(), checksum)
    if result.raise_stats is not None:
        s = result.raise_stats
        print(
            f"raise statistics: raised={s.raised} total={s.total} "
            f"fraction={report.fmt_real(s.fraction)} "
            f"mean_abs_side_diff={report.fmt_real(s.mean_abs_side_diff)}"
        )
    if args.plot:
        report.plot_simulation(result.estimates, Path(out).with_suffix(".png"))
    if result.height_identity_violations:
        print(
            f"internal invariant failure: {result.height_identity_violations} height "
            "decomposition violations",
            file=sys.stderr,
        )
        return 1
    return 0


def cmd_oracle_exact(args) -> int:
    exact = oracle.exact_after_m_arrivals(args.sites, args.arrivals)
    rows = [
        (x, r, p.numerator, p.denominator, report.fmt_real(float(p)))
        for x, r, p in exact.rows()
    ]
    header = ("site", "layer", "numerator", "denominator", "decimal")
    params = {"n_sites": args.sites, "arrivals": args.arrivals}
    _emit(args, header, rows, "oracle exact", params)
    return 0


def cmd_oracle_poissonized(args) -> int:
    value, tail = oracle.exact_density_poissonized(
        args.sites, args.time, args.layer, args.site, args.m_max
    )
    header = ("site", "layer", "t", "value", "tail_bound")
    rows = [
        (
            args.site,
            args.layer,
            report.fmt_real(args.time),
            report.fmt_real(value),
            report.fmt_real(tail),
        )
    ]
    params = {
        "n_sites": args.sites,
        "t": args.time,
        "layer": args.layer,
        "site": args.site,
        "m_max": args.m_max,
    }
    _emit(args, header, rows, "oracle poissonized", params)
    return 0


def cmd_oracle_height_dist(args) -> int:
    dist = oracle.exact_height_dist(args.arrivals)
    rows = []
    for h, p in enumerate(dist.probs):
        p = Fraction(p)
        rows.append((h, p.numerator, p.denominator, report.fmt_real(float(p))))
    header = ("height", "numerator", "denominator", "decimal")
    _emit(args, header, rows, "oracle height-dist", {"arrivals": args.arrivals})
    return 0


def cmd_verify(args) -> int:
    from .verify import run_checks

    results = run_checks(args.level)
    failed = 0
    for c in results:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status}  {c.name}: {c.measured} (tolerance: {c.tolerance})")
        failed += not c.passed
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlpark",
        description="Multilayer parking (random sequential adsorption without "
        "screening): exact densities, Monte Carlo simulation, and "
        "enumeration oracles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_analytic = sub.add_parser("analytic", help="closed-form results")
    asub = p_analytic.add_subparsers(dest="subcommand", required=True)
    p_table = asub.add_parser("table", help="end densities per layer")
    p_table.add_argument("--layers", type=int, default=10)
    p_table.add_argument("--out", default=None)
    p_table.add_argument("--plot", action="store_true")
    p_table.set_defaults(func=cmd_analytic_table)
    p_curve = asub.add_parser("curve", help="time-dependent densities")
    p_curve.add_argument("--layers", default="1,2,3,4")
    p_curve.add_argument("--t-max", type=float, default=5.0)
    p_curve.add_argument("--t-step", type=float, default=0.05)
    p_curve.add_argument("--out", default=None)
    p_curve.add_argument("--plot", action="store_true")
    p_curve.set_defaults(func=cmd_analytic_curve)

    p_sim = sub.add_parser("simulate", help="Monte Carlo density estimation")
    p_sim.add_argument("--sites", type=int, default=3)
    p_sim.add_argument("--arrivals", type=int, default=None)
    p_sim.add_argument("--time", type=float, default=None)
    p_sim.add_argument("--reps", type=int, default=10_000)
    p_sim.add_argument("--layers", type=int, default=10)
    p_sim.add_argument("--observe", default=None, help="comma-separated site list")
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--threads", type=int, default=None)
    p_sim.add_argument("--raise-stats", action="store_true")
    p_sim.add_argument("--out", default="simulation.csv")
    p_sim.add_argument("--plot", action="store_true")
    p_sim.add_argument("--config", default=None, help="key=value config file")
    p_sim.add_argument("--from-manifest", default=None)
    p_sim.set_defaults(func=cmd_simulate)

    p_oracle = sub.add_parser("oracle", help="exact small-scale enumeration")
    osub = p_oracle.add_subparsers(dest="subcommand", required=True)
    p_exact = osub.add_parser("exact", help="occupancy after m uniform arrivals")
    p_exact.add_argument("--sites", type=int, default=3)
    p_exact.add_argument("--arrivals", type=int, required=True)
    p_exact.add_argument("--out", default=None)
    p_exact.set_defaults(func=cmd_oracle_exact)
    p_pois = osub.add_parser("poissonized", help="exact time-t density with tail bound")
    p_pois.add_argument("--sites", type=int, default=3)
    p_pois.add_argument("--time", type=float, required=True)
    p_pois.add_argument("--layer", type=int, required=True)
    p_pois.add_argument("--site", type=int, default=1)
    p_pois.add_argument("--m-max", type=int, default=12)
    p_pois.add_argument("--out", default=None)
    p_pois.set_defaults(func=cmd_oracle_poissonized)
    p_hd = osub.add_parser("height-dist", help="exact height distribution (n=3)")
    p_hd.add_argument("--arrivals", type=int, required=True)
    p_hd.add_argument("--out", default=None)
    p_hd.set_defaults(func=cmd_oracle_height_dist)

    p_verify = sub.add_parser("verify", help="cross-module consistency checks")
    p_verify.add_argument("level", choices=("quick", "full"), nargs="?", default="quick")
    p_verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (OracleBudgetError, UnsupportedConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AssertionError as exc:
        print(f"internal invariant failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
