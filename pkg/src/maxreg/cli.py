"""Command-line front end.

Subcommands: count, count-db, approx, regionmap, bounds, experiment,
init-dump.  Exit codes: 0 success, 2 configuration error, 3 numerical
failure.  The WORKERS environment variable sets the default worker count.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import bounds as bounds_mod
from . import experiment as exp_mod
from . import initializers, net, regions
from .feas import NumericalBreakdownError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(Exception):
    pass


def _default_workers():
    try:
        return max(1, int(os.environ.get("WORKERS", "1")))
    except ValueError:
        return 1


def parse_window(text, n0):
    """Parse "lo:hi" or "lo:hi,lo:hi,..." into a Window over R^{n0}."""
    parts = text.split(",")
    try:
        intervals = []
        for part in parts:
            lo, hi = part.split(":")
            intervals.append((float(lo), float(hi)))
    except ValueError as exc:
        raise ConfigError(f"bad window spec {text!r}: {exc}") from exc
    if len(intervals) == 1:
        intervals = intervals * n0
    if len(intervals) != n0:
        raise ConfigError(
            f"window has {len(intervals)} intervals, network input dim is {n0}"
        )
    try:
        return regions.Window(tuple(intervals))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _load_net(path):
    try:
        with open(path) as fh:
            return net.from_json(fh.read())
    except FileNotFoundError as exc:
        raise ConfigError(f"network file not found: {path}") from exc
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed network file {path}: {exc}") from exc


def _emit(doc, out_path):
    text = json.dumps(doc)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_count(args):
    arch, params = _load_net(args.net)
    window = parse_window(args.window, arch.n0)
    report = regions.count_regions_exact(
        arch, params, window, seed=args.seed, workers=args.workers
    )
    _emit(report.to_dict(), args.out)


def cmd_count_db(args):
    arch, params = _load_net(args.net)
    window = parse_window(args.window, arch.n0)
    report = regions.count_db_exact(
        arch, params, window, seed=args.seed, workers=args.workers
    )
    _emit(report.to_dict(), args.out)


def cmd_approx(args):
    arch, params = _load_net(args.net)
    window = parse_window(args.window, arch.n0)
    try:
        count = regions.count_regions_grid(arch, params, window, args.grid)
    except regions.GridCapError as exc:
        raise ConfigError(str(exc)) from exc
    _emit({"regions": count, "grid_pts": args.grid}, args.out)


def cmd_regionmap(args):
    arch, params = _load_net(args.net)
    window = parse_window(args.window, arch.n0)
    try:
        regions.export_region_map(arch, params, window, args.grid, out_path=args.out)
    except regions.GridCapError as exc:
        raise ConfigError(str(exc)) from exc


def _bounds_table(args):
    n0, n_units, rank, m = args.n0, args.units, args.rank, args.m
    if args.r > n0:
        raise ConfigError(f"r={args.r} exceeds n0={n0}")
    table = {
        "trivial_pattern_bound": bounds_mod.trivial_pattern_bound(
            n_units, rank, args.r
        ),
        "exact_pattern_count": bounds_mod.exact_pattern_count(n_units, rank, args.r),
        "generic_lower_bound": bounds_mod.generic_lower_bound(n0, n_units),
        "max_regions_shallow": bounds_mod.max_regions_shallow(n0, n_units, rank),
        "db_pattern_bound": bounds_mod.db_pattern_bound(n_units, rank, args.r, m),
        "zero_bias_upper": bounds_mod.zero_bias_upper(
            n0, n_units, rank, args.tprime
        ),
    }
    if args.cgrad > 0 and args.cbias > 0:
        bp = bounds_mod.BoundParams(
            args.cgrad, args.cbias, n0, n_units, rank, m_classes=m, r=args.r
        )
        table["expected_regions_upper"] = bounds_mod.expected_regions_upper(
            bp, delta_ok=True
        )
        table["volume_upper"] = bounds_mod.volume_upper(bp, args.r)
        table["db_expected_upper"] = bounds_mod.db_expected_upper(bp, delta_ok=True)
        table["db_volume_upper"] = bounds_mod.db_volume_upper(bp, args.r)
        table["db_distance_lower"] = bounds_mod.db_distance_lower(bp, args.c)
    return table


def cmd_bounds(args):
    table = _bounds_table(args)
    if args.json:
        _emit(table, args.out)
        return
    lines = [f"{name:26s} {value}" for name, value in table.items()]
    text = "\n".join(lines)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_experiment(args):
    try:
        with open(args.config) as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {args.config}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config {args.config}: {exc}") from exc
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.workers is not None:
        doc["workers"] = args.workers
    elif "workers" not in doc:
        doc["workers"] = _default_workers()
    if args.out:
        doc["out"] = args.out
    try:
        config = exp_mod.ExperimentConfig.from_dict(doc)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad config: {exc}") from exc
    csv_path, summary_path = exp_mod.run_experiment(config)
    print(json.dumps({"csv": csv_path, "summary": summary_path}))


def cmd_init_dump(args):
    try:
        arch = net.Architecture(
            args.n0, tuple(args.widths), args.rank, args.out_dim
        )
        spec = initializers.InitSpec(
            scheme=args.scheme,
            dist_shape=args.dist_shape,
            zero_bias=args.zero_bias,
            seed=args.seed or 0,
        )
        params = initializers.sample(arch, spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    text = net.to_json(arch, params)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _add_net_window(p, grid=False):
    p.add_argument("--net", required=True, help="network JSON file")
    p.add_argument("--window", default="-50:50", help="lo:hi[,lo:hi...]")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=_default_workers())
    p.add_argument("--out", default=None)
    if grid:
        p.add_argument("--grid", type=int, default=256, help="points per axis")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="maxreg", description="Linear-region analysis of maxout networks"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="exact region count")
    _add_net_window(p)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("count-db", help="exact decision-boundary piece count")
    _add_net_window(p)
    p.set_defaults(func=cmd_count_db)

    p = sub.add_parser("approx", help="grid-gradient region count")
    _add_net_window(p, grid=True)
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("regionmap", help="region labels on a grid, as CSV")
    _add_net_window(p, grid=True)
    p.set_defaults(func=cmd_regionmap)

    p = sub.add_parser("bounds", help="closed-form bound table")
    p.add_argument("--n0", type=int, required=True)
    p.add_argument("--units", type=int, required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--m", type=int, default=2, help="number of classes")
    p.add_argument("--r", type=int, default=0)
    p.add_argument("--cgrad", type=float, default=0.0)
    p.add_argument("--cbias", type=float, default=0.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--tprime", type=float, default=1.0)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("experiment", help="run a trial sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("init-dump", help="sample and serialize a network")
    p.add_argument("--scheme", default="maxout_he")
    p.add_argument("--n0", type=int, required=True)
    p.add_argument("--widths", type=int, nargs="+", required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--out-dim", type=int, default=1)
    p.add_argument("--dist-shape", default="normal")
    p.add_argument("--zero-bias", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_init_dump)

    return parser


def _join_window_flag(argv):
    """Rewrite ["--window", "-50:50"] as ["--window=-50:50"].

    Window values usually start with a minus sign, which argparse would
    otherwise mistake for an option.
    """
    out = []
    it = iter(argv)
    for arg in it:
        if arg == "--window":
            value = next(it, None)
            if value is None:
                out.append(arg)
            else:
                out.append(f"--window={value}")
        else:
            out.append(arg)
    return out


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(_join_window_flag(argv))
    try:
        args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalBreakdownError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OverflowError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
