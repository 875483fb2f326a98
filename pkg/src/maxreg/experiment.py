"""Trial sweeps over architectures and initializations with CSV output.

An experiment is a JSON config describing a grid of architectures, an
initialization, a window, and the counters to run.  Each (config point,
trial) pair becomes one CSV row.  Rows are appended to a partial file as
they finish, so an interrupted run can be resumed without redoing work;
the final CSV is the partial file sorted by (config index, trial).

Per-trial seeds are spawned from the master seed by (config index, trial)
counter keys, so results do not depend on the worker count or on the
order in which trials happen to finish.
"""
from __future__ import annotations

import csv
import itertools
import json
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field

import numpy as np

from . import bounds, initializers, regions
from .net import Architecture

__all__ = [
    "ExperimentConfig",
    "TrialRow",
    "CSV_COLUMNS",
    "expand_widths",
    "run_experiment",
]

DEFAULT_TRIALS = 30
DEFAULT_GRID_PTS = 512
COUNTER_NAMES = ("exact", "grid", "db")

CSV_COLUMNS = [
    "config_idx",
    "n0",
    "widths",
    "rank",
    "out_dim",
    "scheme",
    "trial",
    "seed",
    "exact_regions",
    "grid_regions",
    "db_pieces",
    "lp_calls",
    "breakdowns",
    "trivial_upper",
    "generic_lower",
    "wall_time_s",
    "error",
]
_NON_DETERMINISTIC = {"wall_time_s"}
_SUMMARY_FIELDS = ("exact_regions", "grid_regions", "db_pieces")


def expand_widths(depth, total):
    """Spread `total` units over `depth` layers, larger layers first.

    110 units over 3 layers gives (37, 37, 36).
    """
    if depth < 1 or total < depth:
        raise ValueError(f"cannot place {total} units in {depth} layers")
    base, rem = divmod(total, depth)
    return tuple(base + (1 if i < rem else 0) for i in range(depth))


@dataclass(frozen=True)
class ExperimentConfig:
    """A grid of architectures plus shared run settings."""

    arch_points: tuple  # of Architecture
    init_kwargs: dict
    window_bounds: tuple | None  # None: cube of window_half per n0
    window_half: float
    trials: int
    counters: tuple
    grid_pts: int
    out: str
    workers: int
    seed: int

    @staticmethod
    def from_dict(doc):
        arch = doc.get("arch", {})
        n0s = _as_list(arch.get("n0", 2))
        ranks = _as_list(arch.get("rank", 2))
        out_dims = _as_list(arch.get("out_dim", 1))
        width_lists = [tuple(w) for w in arch.get("widths", [])]
        for depth, total in arch.get("depth_total", []):
            width_lists.append(expand_widths(int(depth), int(total)))
        if not width_lists:
            raise ValueError("config needs arch.widths or arch.depth_total")
        points = tuple(
            Architecture(int(n0), widths, int(rank), int(m))
            for n0, widths, rank, m in itertools.product(
                n0s, width_lists, ranks, out_dims
            )
        )
        counters = tuple(doc.get("counters", ["exact"]))
        for c in counters:
            if c not in COUNTER_NAMES:
                raise ValueError(f"unknown counter {c!r}; choose from {COUNTER_NAMES}")
        window = doc.get("window", {})
        return ExperimentConfig(
            arch_points=points,
            init_kwargs=dict(doc.get("init", {"scheme": "maxout_he"})),
            window_bounds=(
                tuple(tuple(b) for b in window["bounds"])
                if "bounds" in window
                else None
            ),
            window_half=float(window.get("half", 50.0)),
            trials=int(doc.get("trials", DEFAULT_TRIALS)),
            counters=counters,
            grid_pts=int(doc.get("grid_pts", DEFAULT_GRID_PTS)),
            out=str(doc.get("out", "experiment")),
            workers=int(doc.get("workers", 1)),
            seed=int(doc.get("seed", 0)),
        )

    def window_for(self, n0):
        if self.window_bounds is not None:
            return regions.Window(self.window_bounds)
        return regions.Window.cube(n0, self.window_half)

    def trial_seed(self, config_idx, trial):
        ss = np.random.SeedSequence(self.seed, spawn_key=(config_idx, trial))
        return int(ss.generate_state(1, dtype=np.uint64)[0])


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


@dataclass
class TrialRow:
    """One completed trial, ready for CSV serialization."""

    config_idx: int
    arch: Architecture
    scheme: str
    trial: int
    seed: int
    exact_regions: int | None = None
    grid_regions: int | None = None
    db_pieces: int | None = None
    lp_calls: int = 0
    breakdowns: int = 0
    wall_time_s: float = 0.0
    error: str = ""

    def to_record(self):
        a = self.arch
        return {
            "config_idx": self.config_idx,
            "n0": a.n0,
            "widths": ";".join(str(w) for w in a.widths),
            "rank": a.rank,
            "out_dim": a.out_dim,
            "scheme": self.scheme,
            "trial": self.trial,
            "seed": self.seed,
            "exact_regions": _blank(self.exact_regions),
            "grid_regions": _blank(self.grid_regions),
            "db_pieces": _blank(self.db_pieces),
            "lp_calls": self.lp_calls,
            "breakdowns": self.breakdowns,
            "trivial_upper": a.rank**a.total_units,
            "generic_lower": (
                bounds.generic_lower_bound(a.n0, a.widths[0])[0] if a.depth else 1
            ),
            "wall_time_s": repr(self.wall_time_s),
            "error": self.error,
        }


def _blank(v):
    return "" if v is None else v


def run_trial(config, config_idx, trial):
    """Run one (config point, trial) pair; errors land in the row."""
    arch = config.arch_points[config_idx]
    seed = config.trial_seed(config_idx, trial)
    spec = initializers.InitSpec(seed=seed, **config.init_kwargs)
    row = TrialRow(config_idx, arch, spec.scheme, trial, seed)
    try:
        params = initializers.sample(arch, spec)
        window = config.window_for(arch.n0)
        if "exact" in config.counters:
            rep = regions.count_regions_exact(arch, params, window, seed=seed)
            row.exact_regions = rep.regions
            row.lp_calls += rep.lp_calls
            row.breakdowns += rep.breakdowns
            row.wall_time_s += rep.wall_time_s
        if "grid" in config.counters:
            row.grid_regions = regions.count_regions_grid(
                arch, params, window, config.grid_pts
            )
        if "db" in config.counters:
            rep = regions.count_db_exact(arch, params, window, seed=seed)
            row.db_pieces = rep.db_pieces
            row.lp_calls += rep.lp_calls
            row.breakdowns += rep.breakdowns
            row.wall_time_s += rep.wall_time_s
    except Exception as exc:  # recorded, not fatal to the sweep
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def _read_partial(path):
    if not os.path.exists(path):
        return [], set()
    with open(path, newline="") as fh:
        records = list(csv.DictReader(fh))
    done = {(int(r["config_idx"]), int(r["trial"])) for r in records}
    return records, done


def _run_trial_star(args):
    return run_trial(*args)


def run_experiment(config: ExperimentConfig):
    """Execute the sweep; returns (csv_path, summary_path).

    Writes three files under the `out` prefix: `<out>.partial.csv`
    (append-only, survives crashes), `<out>.csv` (sorted final rows) and
    `<out>.summary.csv` (mean/std per config point).
    """
    partial_path = config.out + ".partial.csv"
    csv_path = config.out + ".csv"
    summary_path = config.out + ".summary.csv"
    out_dir = os.path.dirname(os.path.abspath(partial_path))
    os.makedirs(out_dir, exist_ok=True)

    records, done = _read_partial(partial_path)
    pending = [
        (config, ci, t)
        for ci in range(len(config.arch_points))
        for t in range(config.trials)
        if (ci, t) not in done
    ]

    write_header = not os.path.exists(partial_path)
    with open(partial_path, "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        if write_header:
            writer.writeheader()
            fh.flush()

        def emit(row):
            rec = row.to_record()
            writer.writerow(rec)
            fh.flush()
            records.append({k: str(v) for k, v in rec.items()})

        if config.workers > 1 and len(pending) > 1:
            with ProcessPoolExecutor(config.workers) as pool:
                futures = [pool.submit(_run_trial_star, t) for t in pending]
                for fut in as_completed(futures):
                    emit(fut.result())
        else:
            for task in pending:
                emit(_run_trial_star(task))

    records.sort(key=lambda r: (int(r["config_idx"]), int(r["trial"])))
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(records)

    _write_summary(config, records, summary_path)
    return csv_path, summary_path


def _write_summary(config, records, summary_path):
    header = ["config_idx", "n0", "widths", "rank", "out_dim", "scheme", "trials"]
    for f in _SUMMARY_FIELDS:
        header += [f + "_mean", f + "_std"]
    with open(summary_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        by_cfg = {}
        for r in records:
            by_cfg.setdefault(int(r["config_idx"]), []).append(r)
        for ci in sorted(by_cfg):
            rows = by_cfg[ci]
            first = rows[0]
            out = [
                ci,
                first["n0"],
                first["widths"],
                first["rank"],
                first["out_dim"],
                first["scheme"],
                len(rows),
            ]
            for f in _SUMMARY_FIELDS:
                vals = [float(r[f]) for r in rows if r[f] != ""]
                if vals:
                    out += [repr(float(np.mean(vals))), repr(float(np.std(vals)))]
                else:
                    out += ["", ""]
            writer.writerow(out)


def stable_csv_text(path):
    """CSV contents with the non-deterministic columns blanked out."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for r in reader:
            rows.append(
                {k: ("" if k in _NON_DETERMINISTIC else v) for k, v in r.items()}
            )
    return json.dumps(rows, sort_keys=True)
