"""Closed-form counts and bounds for maxout-network region complexity.

Every calculator is a pure function.  Integer-valued formulas are computed
in arbitrary precision; real-valued expectation bounds are computed in
double precision, switching binomials to a log-Gamma evaluation once the
arguments get large.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BoundParams",
    "trivial_pattern_bound",
    "exact_pattern_count",
    "generic_lower_bound",
    "layer_positive_measure_count",
    "deep_grid_count",
    "max_regions_shallow",
    "max_regions_deep_bounds",
    "expected_regions_upper",
    "volume_upper",
    "db_pattern_bound",
    "db_expected_upper",
    "db_volume_upper",
    "db_distance_lower",
    "zero_bias_upper",
    "maxout_he_std",
    "c_bias_normal",
    "estimate_cgrad_bound",
    "single_unit_expected_scan",
]

_LOG_GAMMA_CUTOFF = 1000


@dataclass(frozen=True)
class BoundParams:
    """Inputs shared by the expected-count/volume bound formulas."""

    c_grad: float
    c_bias: float
    n0: int
    n_units: int
    rank: int
    m_classes: int = 2
    r: int = 0

    def __post_init__(self):
        if self.c_grad <= 0 or self.c_bias <= 0:
            raise ValueError("c_grad and c_bias must be positive")
        if self.r < 0 or self.r > self.n0:
            raise ValueError(f"r must be in [0, n0], got r={self.r} n0={self.n0}")

    @property
    def t_const(self):
        return 32.0 * self.c_grad * self.c_bias


def _binom_float(n, k):
    if k < 0 or k > n:
        return 0.0
    if n <= _LOG_GAMMA_CUTOFF:
        return float(math.comb(n, k))
    return math.exp(
        math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
    )


def trivial_pattern_bound(n_units, rank, r):
    """C(rK, 2r) * C(N, r) * K^(N-r); r=0 gives K^N."""
    if r < 0:
        raise ValueError("r must be >= 0")
    return (
        math.comb(r * rank, 2 * r)
        * math.comb(n_units, r)
        * rank ** (n_units - r)
    )


def exact_pattern_count(n_units, rank, r):
    """Exact number of r-partial activation patterns.

    Sums over the number of units N_j having 1+j features tied at the
    maximum, for j = 0..K-1, subject to sum N_j = N and sum j*N_j = r.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    total = 0

    def rec(j, units_left, r_left, acc):
        nonlocal total
        if j == rank - 1:
            # last bucket takes all remaining units; C(K, K) = 1 ways each
            if j * units_left == r_left:
                total += acc
            return
        ways = math.comb(rank, 1 + j)
        for n_j in range(units_left + 1):
            rem_r = r_left - j * n_j
            if rem_r < 0:
                break
            rec(
                j + 1,
                units_left - n_j,
                rem_r,
                acc * math.comb(units_left, n_j) * ways**n_j,
            )

    rec(0, n_units, r, 1)
    return total


def generic_lower_bound(n0, n1):
    """Almost-sure lower bounds: (all regions, bounded regions)."""
    regions = sum(math.comb(n1, j) for j in range(n0 + 1))
    bounded = math.comb(n1 - 1, n0) if n1 >= 1 else 0
    return regions, bounded


def layer_positive_measure_count(n0, ks):
    """Region count of the parallel-hyperplane layer construction.

    Sum over subsets S of units with |S| <= n0 of prod_{i in S}(k_i - 1),
    computed as the first n0+1 coefficients of prod_i (1 + (k_i - 1) t).
    """
    coeffs = [1] + [0] * n0
    for k in ks:
        w = k - 1
        for j in range(min(n0, len(ks)), 0, -1):
            coeffs[j] += coeffs[j - 1] * w
    return sum(coeffs)


def deep_grid_count(n0, k_matrix, widths):
    """Region count of the deep grid construction over the unit cube."""
    total = 1
    for n_l, ks in zip(widths, k_matrix, strict=True):
        if n_l % n0 != 0 or (n_l // n0) % 2 != 0:
            raise ValueError(
                f"width {n_l} must be divisible by n0={n0} with an even quotient"
            )
        if len(ks) != n0:
            raise ValueError(f"need {n0} ranks per layer, got {len(ks)}")
        for k in ks:
            total *= (n_l // n0) * (k - 1) + 1
    return total


def max_regions_shallow(n0, n1, rank):
    """Maximum regions of a single maxout layer."""
    return sum(math.comb(n1, j) * (rank - 1) ** j for j in range(n0 + 1))


def max_regions_deep_bounds(n0, widths, rank, n):
    """(lower, upper) bounds on the maximum regions of a deep network.

    Requires n <= n0 and each width divisible by n with an even quotient
    for the lower-bound construction to apply.
    """
    if n > n0:
        raise ValueError("n must be <= n0")
    lower = 1
    for n_l in widths:
        lower *= ((n_l // n) * (rank - 1) + 1) ** n
    upper = 1
    dims = [n0] + list(widths)
    for l, n_l in enumerate(widths):
        e_l = min(dims[: l + 1])
        upper *= sum(math.comb(n_l, j) * (rank - 1) ** j for j in range(e_l + 1))
    return lower, upper


def expected_regions_upper(bp: BoundParams, delta_ok=False):
    """Expected r-partial activation regions per unit volume (upper bound).

    Valid for cubes with side length above an inexplicit threshold; the
    caller asserts that via delta_ok.
    """
    if not delta_ok:
        raise ValueError(
            "caller must assert the cube side exceeds the validity threshold"
        )
    n0, n_units, rank, r = bp.n0, bp.n_units, bp.rank, bp.r
    if n_units <= n0:
        return float(trivial_pattern_bound(n_units, rank, r))
    return (
        (bp.t_const * rank * n_units) ** n0
        * _binom_float(n0 * rank, 2 * n0)
        / ((2 * rank) ** r * math.factorial(n0))
    )


def volume_upper(bp: BoundParams, r):
    """Expected (n0-r)-volume of the non-linear locus per unit volume."""
    return (
        (2.0 * bp.c_grad * bp.c_bias) ** r
        * _binom_float(r * bp.rank, 2 * r)
        * _binom_float(bp.n_units, r)
    )


def db_pattern_bound(n_units, rank, r, m_classes):
    """Upper bound on r-partial activation patterns of the decision boundary."""
    total = 0
    for i in range(1, min(m_classes - 1, r) + 1):
        total += (
            math.comb(m_classes, i + 1)
            * math.comb(rank * (r - i), 2 * (r - i))
            * math.comb(n_units, r - i)
            * rank ** (n_units - r + i)
        )
    return total


def db_expected_upper(bp: BoundParams, delta_ok=False):
    """Expected linear pieces of the decision boundary per unit volume."""
    if bp.m_classes < 2:
        return 0.0
    if not delta_ok:
        raise ValueError(
            "caller must assert the cube side exceeds the validity threshold"
        )
    n0, n_units, rank, m = bp.n0, bp.n_units, bp.rank, bp.m_classes
    if n_units <= n0:
        return float(math.comb(m, 2) * rank**n_units)
    return (
        (16.0 * bp.c_grad * bp.c_bias) ** n0
        * (2.0 * rank * n_units) ** (n0 - 1)
        / math.factorial(n0 - 1)
        * _binom_float(m, 2)
        * _binom_float(rank * (n0 - 1), 2 * (n0 - 1))
    )


def db_volume_upper(bp: BoundParams, r):
    """Expected (n0-r)-volume of the decision boundary skeleton."""
    inner = 0.0
    for i in range(1, min(bp.m_classes - 1, r) + 1):
        inner += (
            _binom_float(bp.m_classes, i + 1)
            * _binom_float(bp.rank * (r - i), 2 * (r - i))
            * _binom_float(bp.n_units, r - i)
        )
    return (2.0 * bp.c_grad * bp.c_bias) ** r * inner


def db_distance_lower(bp: BoundParams, c):
    """Lower bound on the expected distance to the decision boundary."""
    if c == 0:
        return 0.0
    m = min(bp.m_classes - 1, bp.n0)
    if m == 0:
        return math.inf  # single class: no boundary at all
    return c / (2.0 * bp.c_grad * bp.c_bias * bp.m_classes ** (m + 1) * m)


def zero_bias_upper(n0, n_units, rank, t_prime):
    """Expected activation regions of a zero-bias network (upper bound)."""
    if n_units <= n0:
        return float(rank**n_units)
    return (
        2.0
        * n0
        * (t_prime * rank * n_units) ** (n0 - 1)
        * _binom_float(rank * (n0 - 1), 2 * (n0 - 1))
        / math.factorial(n0 - 1)
    )


# --- initialization-scale constants ---------------------------------------

# Weight std factors (numerators of std^2 * fan_in) for the normal-response
# assumption; the rank-5 value is a fixed numeric constant.
_HE_NORMAL_VAR = {
    1: 1.0,
    2: 1.0,
    3: 2.0 * math.pi / (math.sqrt(3.0) + 2.0 * math.pi),
    4: math.pi / (math.sqrt(3.0) + math.pi),
    5: 0.5555,
}


def maxout_he_std(rank, fan_in, dist_shape="normal"):
    """Weight std preserving activation norms across maxout layers.

    For the normal-response assumption only ranks 1..5 have tabulated
    values; the uniform-response assumption has a closed form for any rank.
    """
    if fan_in < 1:
        raise ValueError("fan_in must be positive")
    if dist_shape == "normal":
        if rank not in _HE_NORMAL_VAR:
            raise ValueError(
                f"no tabulated normal-response std for rank {rank}; "
                "use dist_shape='uniform'"
            )
        return math.sqrt(_HE_NORMAL_VAR[rank] / fan_in)
    if dist_shape == "uniform":
        # Second moment of the max of K iid uniform responses gives the
        # norm-preservation factor c = 12*(1/4 - K/((K+1)(K+2))); the weight
        # variance is then 1/(c * fan_in).
        c = 12.0 * (0.25 - rank / ((rank + 2.0) * (rank + 1.0)))
        return math.sqrt(1.0 / (c * fan_in))
    raise ValueError(f"unknown dist_shape {dist_shape!r}")


def c_bias_normal(std):
    """Density supremum of an N(0, std^2) bias: a valid bias constant."""
    if std <= 0:
        raise ValueError("std must be positive")
    return 1.0 / (std * math.sqrt(2.0 * math.pi))


def estimate_cgrad_bound(arch, c, t, samples, seed=0, block=200_000):
    """Monte Carlo value of the gradient-moment constant bound.

    Combines the closed-form chi-moment factor with sampled expectations of
    sums of maxima of K iid chi-square variables, one factor per interior
    layer.  Deterministic for a fixed seed (counter-based generator).
    """
    if samples < 10_000:
        raise ValueError("need at least 1e4 samples")
    if c <= 0 or t < 1:
        raise ValueError("c must be positive and t >= 1")
    widths = arch.widths
    depth = len(widths)
    n_last = widths[-1] if depth else arch.n0
    chi_factor = (n_last * (n_last + t) ** (t / 2.0 - 1.0)) ** (1.0 / t)
    value = math.sqrt(c / arch.n0) * chi_factor
    rank = arch.rank
    for l in range(1, depth):
        n_l = widths[l - 1]
        df = arch.n0 if l == 1 else widths[l - 2]
        gen = np.random.Generator(np.random.Philox(key=seed + l))
        acc = 0.0
        done = 0
        while done < samples:
            n = min(block, samples - done)
            draws = gen.chisquare(df, size=(n, n_l, rank)).max(axis=2)
            acc += ((c / n_l) * draws.sum(axis=1)) ** (t / 2.0) @ np.ones(n)
            done += n
        value *= (acc / samples) ** (1.0 / t)
    return value


def single_unit_expected_scan(n0, rank_list, trials, window_half=50.0, seed=0):
    """Mean exact region counts of single maxout units with iid N(0,1) params.

    Returns one record per rank with the per-trial counts, their mean and
    std; used to check the sublinear growth of the count in the rank.
    """
    from . import regions as regions_mod
    from .net import Architecture, Parameters

    window = regions_mod.Window.cube(n0, window_half)
    results = []
    for rank in rank_list:
        counts = []
        for trial in range(trials):
            gen = np.random.default_rng(
                np.random.SeedSequence(seed, spawn_key=(rank, trial))
            )
            arch = Architecture(n0, (1,), rank, 1)
            params = Parameters(
                hidden_w=(gen.normal(size=(1, rank, n0)),),
                hidden_b=(gen.normal(size=(1, rank)),),
                out_w=np.ones((1, 1)),
                out_b=np.zeros(1),
            )
            report = regions_mod.count_regions_exact(arch, params, window)
            counts.append(report.regions)
        results.append(
            {
                "rank": rank,
                "counts": counts,
                "mean": float(np.mean(counts)),
                "std": float(np.std(counts)),
            }
        )
    return results
