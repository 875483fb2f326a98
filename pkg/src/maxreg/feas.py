"""Linear-inequality feasibility via a phase-1 simplex method.

This is the kernel of the exact region counters: it decides whether a system
of rows a.x <= b (plus optional equality rows a.x == b) over R^d has a
solution, and if so produces a witness point.

The solver is a dense phase-1 simplex with artificial variables and Bland's
anti-cycling rule, so it is deterministic and terminates.  Free variables are
split as x = x+ - x-.  A warm-start point may be supplied; the system is then
shifted so the point becomes the origin, which leaves artificial variables
only on the rows the point violates.  During region enumeration the parent
region's witness satisfies all but the freshly added rows, which keeps the
number of pivots per call small.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LE",
    "EQ",
    "InequalitySystem",
    "FeasibilityResult",
    "NumericalBreakdownError",
    "is_feasible",
    "with_row",
]

LE = "<="
EQ = "=="

# Tolerances: pivots below PIVOT_TOL are treated as zero; phase-1 declares
# feasibility when the artificial objective drops to FEAS_TOL or below.
PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
WITNESS_LE_SLACK = -1e-9
WITNESS_EQ_TOL = 1e-7


class NumericalBreakdownError(RuntimeError):
    """The simplex could not reach a conclusive answer."""

    def __init__(self, message, n_rows):
        super().__init__(f"{message} ({n_rows} rows)")
        self.n_rows = n_rows


@dataclass(frozen=True)
class _Row:
    a: np.ndarray
    b: float
    kind: str


class InequalitySystem:
    """An immutable system of rows a.x <= b / a.x == b over R^dim.

    Systems only ever grow: `with_row` returns a new system whose row tuple
    shares the parent's row objects, so thousands of sibling systems share
    prefix storage.
    """

    __slots__ = ("dim", "_rows", "_arrays")

    def __init__(self, dim, rows=()):
        self.dim = int(dim)
        self._rows = tuple(rows)
        self._arrays = None

    def __len__(self):
        return len(self._rows)

    @property
    def rows(self):
        return self._rows

    def with_row(self, a, b, kind=LE):
        a = np.asarray(a, dtype=float)
        if a.shape != (self.dim,):
            raise ValueError(f"row has dim {a.shape}, system has dim {self.dim}")
        if kind not in (LE, EQ):
            raise ValueError(f"unknown row kind {kind!r}")
        if not (np.all(np.isfinite(a)) and np.isfinite(b)):
            raise ValueError("row has non-finite entries")
        child = InequalitySystem.__new__(InequalitySystem)
        child.dim = self.dim
        child._rows = self._rows + (_Row(a, float(b), kind),)
        child._arrays = None
        return child

    def with_rows(self, rows):
        """Append several (a, b, kind) rows at once."""
        sys = self
        for a, b, kind in rows:
            sys = sys.with_row(a, b, kind)
        return sys

    def as_arrays(self):
        """Stacked (A, b, eq_mask); cached after first use."""
        if self._arrays is None:
            m = len(self._rows)
            a = np.empty((m, self.dim))
            b = np.empty(m)
            eq = np.zeros(m, dtype=bool)
            for i, row in enumerate(self._rows):
                a[i] = row.a
                b[i] = row.b
                eq[i] = row.kind == EQ
            self._arrays = (a, b, eq)
        return self._arrays

    def dump(self):
        """Plain-text form, one row per line."""
        lines = []
        for row in self._rows:
            coeffs = " ".join(repr(float(v)) for v in row.a)
            lines.append(f"{coeffs} {row.kind} {row.b!r}")
        return "\n".join(lines)


def with_row(sys, a, b, kind=LE):
    return sys.with_row(a, b, kind)


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    witness: np.ndarray | None

    def __bool__(self):
        return self.feasible


def _witness_ok(sys, x):
    a, b, eq = sys.as_arrays()
    if len(b) == 0:
        return True
    resid = b - a @ x
    le = ~eq
    if np.any(resid[le] < WITNESS_LE_SLACK):
        return False
    return not np.any(np.abs(resid[eq]) > WITNESS_EQ_TOL)


def is_feasible(sys, warm_start=None, max_rows=100_000):
    """Decide feasibility of the system; returns a FeasibilityResult.

    Raises NumericalBreakdownError instead of ever returning a silently
    wrong answer: a "feasible" result always carries a verified witness.
    """
    m = len(sys)
    if m > max_rows:
        raise ValueError(f"system has {m} rows, max is {max_rows}")
    d = sys.dim
    if m == 0:
        return FeasibilityResult(True, np.zeros(d))

    a, b, eq = sys.as_arrays()
    x0 = np.zeros(d) if warm_start is None else np.asarray(warm_start, dtype=float)
    rhs = b - a @ x0

    # Fast path: the warm-start point already satisfies everything.
    if warm_start is not None and _witness_ok(sys, x0):
        return FeasibilityResult(True, x0.copy())

    le = ~eq
    n_le = int(le.sum())
    # Column layout: [u (d) | v (d) | slacks (n_le) | artificials].
    # Row signs are flipped so every RHS is nonnegative; LE rows whose slack
    # then enters with coefficient -1 need an artificial, as do all EQ rows.
    neg = rhs < 0
    sign = np.where(neg, -1.0, 1.0)
    a_signed = a * sign[:, None]
    rhs_signed = rhs * sign

    slack_col = np.full(m, -1, dtype=int)
    slack_col[le] = 2 * d + np.arange(n_le)
    slack_coef = np.where(neg, -1.0, 1.0)

    needs_art = eq | neg
    art_rows = np.flatnonzero(needs_art)
    n_art = len(art_rows)
    ncols = 2 * d + n_le + n_art

    T = np.zeros((m + 1, ncols + 1))
    T[:m, :d] = a_signed
    T[:m, d : 2 * d] = -a_signed
    for i in np.flatnonzero(le):
        T[i, slack_col[i]] = slack_coef[i]
    basis = np.empty(m, dtype=int)
    for j, i in enumerate(art_rows):
        T[i, 2 * d + n_le + j] = 1.0
        basis[i] = 2 * d + n_le + j
    for i in np.flatnonzero(le & ~neg):
        basis[i] = slack_col[i]
    T[:m, -1] = rhs_signed

    # Phase-1 objective: minimize the sum of artificials.  The objective row
    # holds, per column, the amount by which entering that column decreases
    # the objective; it starts as the sum of the artificial rows.
    T[m] = T[art_rows].sum(axis=0)
    allowed = np.ones(ncols, dtype=bool)
    allowed[2 * d + n_le :] = False  # artificials never re-enter

    max_iter = 200 + 25 * (m + ncols)
    for _ in range(max_iter):
        if T[m, -1] <= FEAS_TOL:
            break
        enter_candidates = np.flatnonzero(allowed & (T[m, :ncols] > PIVOT_TOL))
        if len(enter_candidates) == 0:
            break
        j = int(enter_candidates[0])  # Bland: smallest index
        col = T[:m, j]
        rows_pos = np.flatnonzero(col > PIVOT_TOL)
        if len(rows_pos) == 0:
            raise NumericalBreakdownError(
                "phase-1 column unbounded", n_rows=m
            )
        ratios = T[rows_pos, -1] / col[rows_pos]
        best = ratios.min()
        ties = rows_pos[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
        i = int(ties[np.argmin(basis[ties])])  # Bland: smallest basis index
        # Pivot on (i, j).
        T[i] /= T[i, j]
        col_vals = T[:, j].copy()
        col_vals[i] = 0.0
        T -= np.outer(col_vals, T[i])
        if basis[i] >= 2 * d + n_le:
            allowed[basis[i]] = False
        basis[i] = j
    else:
        raise NumericalBreakdownError("phase-1 iteration cap exceeded", n_rows=m)

    objective = T[m, -1]
    if objective > FEAS_TOL:
        return FeasibilityResult(False, None)

    values = np.zeros(ncols)
    values[basis] = T[:m, -1]
    x = x0 + values[:d] - values[d : 2 * d]
    if not _witness_ok(sys, x):
        raise NumericalBreakdownError("witness verification failed", n_rows=m)
    return FeasibilityResult(True, x)
