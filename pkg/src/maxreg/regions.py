"""Region enumeration and counting over a bounded input window.

Three counters are provided:

* count_regions_exact -- exact enumeration of activation regions by
  layer-by-layer, unit-by-unit subdivision with linear-programming
  feasibility checks.
* count_db_exact -- exact count of decision-boundary pieces: feasible
  (region, class-pair) combinations where two outputs tie and dominate
  the rest.
* count_regions_grid -- approximate count via distinct gradients of the
  summed output on a regular grid.

Strict inequalities are realized as closed inequalities with a margin
`eps` (default 1e-6) on the right-hand side, which also rules out the
all-zero solution for zero-bias networks.
"""
from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import feas
from .net import AffineMap

__all__ = [
    "Window",
    "Region",
    "CountReport",
    "GridCapError",
    "count_regions_exact",
    "count_db_exact",
    "count_regions_grid",
    "export_region_map",
]

log = logging.getLogger(__name__)

DEFAULT_EPS = 1e-6
GRID_CAP = 4_000_000
GRAD_ROUND = 1e-9


class GridCapError(ValueError):
    """Requested grid exceeds the configured point cap."""


@dataclass(frozen=True)
class Window:
    """Axis-aligned box [lo_i, hi_i] per input coordinate."""

    bounds: tuple

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        object.__setattr__(self, "bounds", bounds)
        for lo, hi in bounds:
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError(f"bad interval [{lo}, {hi}]")

    @staticmethod
    def cube(dim, half_side):
        return Window(tuple((-half_side, half_side) for _ in range(dim)))

    @property
    def dim(self):
        return len(self.bounds)

    @property
    def center(self):
        return np.array([(lo + hi) / 2.0 for lo, hi in self.bounds])

    def to_system(self):
        sys = feas.InequalitySystem(self.dim)
        for i, (lo, hi) in enumerate(self.bounds):
            e = np.zeros(self.dim)
            e[i] = 1.0
            sys = sys.with_row(e, hi, feas.LE)
            sys = sys.with_row(-e, -lo, feas.LE)
        return sys

    def axes(self, grid_pts):
        return [np.linspace(lo, hi, grid_pts) for lo, hi in self.bounds]


@dataclass
class Region:
    """A surviving activation region during enumeration.

    `layer_map` is the affine function computed by the fully processed
    layers on this region; `next_rows` accumulates the selected feature
    maps of the layer currently being swept.
    """

    pattern: tuple
    sys: feas.InequalitySystem
    layer_map: AffineMap
    witness: np.ndarray
    next_rows: list = field(default_factory=list)


@dataclass
class CountReport:
    regions: int
    db_pieces: int | None
    lp_calls: int
    wall_time_s: float
    seed: int | None
    window: Window
    breakdowns: int = 0

    def to_dict(self):
        return {
            "regions": self.regions,
            "db_pieces": self.db_pieces,
            "lp_calls": self.lp_calls,
            "wall_time_s": self.wall_time_s,
            "seed": self.seed,
            "window": [list(b) for b in self.window.bounds],
            "breakdowns": self.breakdowns,
        }

    def to_json(self):
        return json.dumps(self.to_dict())


class _Enumerator:
    """Shared state for one enumeration sweep."""

    def __init__(self, arch, params, window, eps, workers, prune):
        params.validate(arch)
        if window.dim != arch.n0:
            raise ValueError(f"window dim {window.dim} != n0 {arch.n0}")
        self.arch = arch
        self.params = params
        self.eps = eps
        self.prune = prune
        self.lp_calls = 0
        self.breakdowns = 0
        self.pool = ThreadPoolExecutor(workers) if workers and workers > 1 else None
        start_sys = window.to_system()
        self.regions = [
            Region(
                pattern=(),
                sys=start_sys,
                layer_map=AffineMap.identity(arch.n0),
                witness=window.center,
            )
        ]

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()

    def _check_feature(self, region, feat_a, feat_c, j0):
        """Rows forcing feature j0 to dominate; returns a child or None."""
        k_rank = feat_a.shape[0]
        others = [i for i in range(k_rank) if i != j0]
        rows = [
            (feat_a[i] - feat_a[j0], feat_c[j0] - feat_c[i] - self.eps, feas.LE)
            for i in others
        ]
        # Witness shortcut: if the parent witness already satisfies the new
        # rows, no LP is needed and the witness carries over.
        w = region.witness
        if all(a @ w <= b for a, b, _ in rows):
            child_sys = region.sys.with_rows(rows)
            witness = w
        else:
            child_sys = region.sys.with_rows(rows)
            self.lp_calls += 1
            try:
                result = feas.is_feasible(child_sys, warm_start=w)
            except feas.NumericalBreakdownError:
                # Conservative: treat as feasible so we never under-count.
                self.breakdowns += 1
                log.warning("feasibility breakdown; keeping region (over-count)")
                result = feas.FeasibilityResult(True, w)
            if not result.feasible:
                return None
            witness = result.witness
        if self.prune:
            child_sys = _prune_duplicate_rows(child_sys)
        return Region(
            pattern=region.pattern + (j0,),
            sys=child_sys,
            layer_map=region.layer_map,
            witness=witness,
            next_rows=region.next_rows + [(feat_a[j0], feat_c[j0])],
        )

    def _sweep_unit(self, w_unit, b_unit):
        """Split every surviving region on one maxout unit."""
        k_rank = self.arch.rank
        tasks = []
        for region in self.regions:
            feat_a = w_unit @ region.layer_map.a  # (K, n0)
            feat_c = w_unit @ region.layer_map.c + b_unit
            for j0 in range(k_rank):
                tasks.append((region, feat_a, feat_c, j0))
        if self.pool is None:
            children = [self._check_feature(*t) for t in tasks]
        else:
            # Checks are pure and independent; results are joined in task
            # order (parent index, then feature index) so the outcome does
            # not depend on the worker count.
            children = list(self.pool.map(lambda t: self._check_feature(*t), tasks))
        self.regions = [c for c in children if c is not None]

    def run(self):
        for l in range(self.arch.depth):
            w_l = self.params.hidden_w[l]
            b_l = self.params.hidden_b[l]
            for u in range(self.arch.widths[l]):
                self._sweep_unit(w_l[u], b_l[u])
            for region in self.regions:
                a_rows = np.stack([a for a, _ in region.next_rows])
                c_vals = np.array([c for _, c in region.next_rows])
                # next_rows are already expressed in input coordinates
                region.layer_map = AffineMap(a_rows, c_vals)
                region.next_rows = []
        return self.regions

    def output_map(self, region):
        """Composed affine output map R^{n0} -> R^M on this region."""
        return AffineMap(self.params.out_w, self.params.out_b).compose(
            region.layer_map
        )


def _prune_duplicate_rows(sys):
    seen = set()
    kept = feas.InequalitySystem(sys.dim)
    for row in sys.rows:
        key = (row.kind, round(row.b, 12)) + tuple(np.round(row.a, 12))
        if key in seen:
            continue
        seen.add(key)
        kept = kept.with_row(row.a, row.b, row.kind)
    return kept


def count_regions_exact(
    arch,
    params,
    window,
    eps=DEFAULT_EPS,
    seed=None,
    workers=None,
    prune=False,
    return_regions=False,
):
    """Exact number of activation regions intersecting the window.

    Each unit splits every surviving region into at most K children, one
    per feature that can dominate (with margin eps) somewhere in the
    region.  Children replace the parent; the final count is the number
    of surviving regions.
    """
    t0 = time.perf_counter()
    enum = _Enumerator(arch, params, window, eps, workers, prune)
    try:
        regions = enum.run()
    finally:
        enum.close()
    report = CountReport(
        regions=len(regions),
        db_pieces=None,
        lp_calls=enum.lp_calls,
        wall_time_s=time.perf_counter() - t0,
        seed=seed,
        window=window,
        breakdowns=enum.breakdowns,
    )
    if return_regions:
        return report, regions
    return report


def count_db_exact(arch, params, window, eps=DEFAULT_EPS, seed=None, workers=None):
    """Exact number of decision-boundary pieces in the window.

    A piece is a feasible (region, unordered class pair) combination where
    the two classes tie and dominate every other class by at least eps.
    """
    if arch.out_dim < 2:
        raise ValueError("decision boundary requires out_dim >= 2")
    t0 = time.perf_counter()
    enum = _Enumerator(arch, params, window, eps, workers, prune=False)
    try:
        regions = enum.run()
        m_cls = arch.out_dim
        pieces = 0
        for region in regions:
            out = enum.output_map(region)
            for i in range(m_cls):
                for j in range(i + 1, m_cls):
                    sys = region.sys.with_row(
                        out.a[i] - out.a[j], out.c[j] - out.c[i], feas.EQ
                    )
                    for other in range(m_cls):
                        if other in (i, j):
                            continue
                        sys = sys.with_row(
                            out.a[other] - out.a[i],
                            out.c[i] - out.c[other] - eps,
                            feas.LE,
                        )
                    enum.lp_calls += 1
                    try:
                        if feas.is_feasible(sys, warm_start=region.witness).feasible:
                            pieces += 1
                    except feas.NumericalBreakdownError:
                        enum.breakdowns += 1
                        log.warning("feasibility breakdown in db check (over-count)")
                        pieces += 1
    finally:
        enum.close()
    return CountReport(
        regions=len(regions),
        db_pieces=pieces,
        lp_calls=enum.lp_calls,
        wall_time_s=time.perf_counter() - t0,
        seed=seed,
        window=window,
        breakdowns=enum.breakdowns,
    )


def _grid_points(window, grid_pts, cap):
    if grid_pts < 2:
        raise ValueError("grid_pts must be >= 2")
    total = grid_pts ** window.dim
    if total > cap:
        raise GridCapError(f"{total} grid points exceed the cap of {cap}")
    axes = window.axes(grid_pts)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _batched_sum_gradients(arch, params, points, block=65536):
    """Gradient of the summed output at each point, shape (P, n0)."""
    params.validate(arch)
    out = np.empty((len(points), arch.n0))
    v_out = params.out_w.sum(axis=0)  # d(sum outputs)/d(last hidden)
    for s in range(0, len(points), block):
        x = points[s : s + block]
        h = x
        jac = np.broadcast_to(
            np.eye(arch.n0), (len(x), arch.n0, arch.n0)
        )  # (P, dim_h, n0)
        for w, b in zip(params.hidden_w, params.hidden_b):
            pre = np.einsum("pq,ukq->puk", h, w) + b
            idx = pre.argmax(axis=2)  # (P, n_l)
            h = np.take_along_axis(pre, idx[:, :, None], axis=2)[:, :, 0]
            w_sel = w[np.arange(w.shape[0])[None, :], idx, :]  # (P, n_l, prev)
            jac = np.einsum("pur,prn->pun", w_sel, jac)
        out[s : s + block] = np.einsum("u,pun->pn", v_out, jac)
    return out


def _gradient_labels(grads):
    """First-visit-order labels of rounded gradient vectors."""
    rounded = np.round(grads / GRAD_ROUND) * GRAD_ROUND
    labels = np.empty(len(rounded), dtype=int)
    seen = {}
    for i, row in enumerate(map(tuple, rounded)):
        if row not in seen:
            seen[row] = len(seen)
        labels[i] = seen[row]
    return labels, len(seen)


def count_regions_grid(arch, params, window, grid_pts, cap=GRID_CAP):
    """Number of distinct (rounded) gradients of the summed output on a grid.

    A lower bound on the number of linear regions meeting the window: the
    grid can miss small regions and merges regions with equal gradient.
    """
    points = _grid_points(window, grid_pts, cap)
    grads = _batched_sum_gradients(arch, params, points)
    _, count = _gradient_labels(grads)
    return count


def export_region_map(arch, params, window, grid_pts, out_path=None, cap=GRID_CAP):
    """Region labels on a grid, row-major; optionally written as CSV.

    Labels follow first-visit order of the distinct rounded gradients.
    The CSV has a header naming the grid coordinates plus "label".
    """
    points = _grid_points(window, grid_pts, cap)
    grads = _batched_sum_gradients(arch, params, points)
    labels, _ = _gradient_labels(grads)
    grid = labels.reshape((grid_pts,) * window.dim)
    if out_path is not None:
        header = ",".join(f"y{i + 1}" for i in range(window.dim)) + ",label"
        with open(out_path, "w") as fh:
            fh.write(header + "\n")
            for point, label in zip(points, labels):
                coords = ",".join(repr(float(v)) for v in point)
                fh.write(f"{coords},{label}\n")
    return grid
