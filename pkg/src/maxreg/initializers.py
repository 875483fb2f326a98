"""Parameter samplers and deterministic region-rich constructions.

Sampling is reproducible and order-independent: every (layer, unit) pair
gets its own generator derived from the spec seed via SeedSequence spawn
keys, so parallel sampling cannot change the result.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bounds import maxout_he_std
from .net import Architecture, Parameters

__all__ = [
    "InitSpec",
    "sample",
    "steinwart_offset",
    "construct_unit_rank_k",
    "construct_layer_parallel",
]

SCHEMES = ("relu_he", "maxout_he", "sphere", "many_regions")

# spawn-key prefixes keeping the per-purpose generators disjoint
_KEY_HIDDEN = 0
_KEY_OUTPUT = 1
_KEY_SHIFT = 2


@dataclass(frozen=True)
class InitSpec:
    """How to draw network parameters.

    steinwart_shift moves each first-layer unit's nonlinear locus by a
    random offset c (biases become b_k + <w_k, c>): "cube" draws c uniform
    in [-1,1]^{n0}, "data" draws a random convex combination of the
    supplied data points.
    """

    scheme: str
    dist_shape: str = "normal"
    zero_bias: bool = False
    steinwart_shift: str | None = None
    data_points: tuple = ()
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.dist_shape not in ("normal", "uniform"):
            raise ValueError(f"unknown dist_shape {self.dist_shape!r}")
        if self.steinwart_shift not in (None, "cube", "data"):
            raise ValueError(f"bad steinwart_shift {self.steinwart_shift!r}")
        if self.steinwart_shift == "data" and len(self.data_points) == 0:
            raise ValueError("steinwart_shift='data' needs data_points")
        if self.noise < 0:
            raise ValueError("noise must be >= 0")


def _unit_rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _weight_std(spec, rank, fan_in):
    if spec.scheme == "relu_he":
        return np.sqrt(2.0 / fan_in)
    return maxout_he_std(rank, fan_in, spec.dist_shape)


def _draw(gen, std, shape, dist_shape):
    if dist_shape == "uniform":
        a = std * np.sqrt(3.0)
        return gen.uniform(-a, a, size=shape)
    return gen.normal(0.0, std, size=shape)


def _sample_unit(spec, gen, rank, fan_in):
    """Weights (K, fan_in) and biases (K,) for one hidden unit."""
    if spec.scheme in ("relu_he", "maxout_he"):
        std = _weight_std(spec, rank, fan_in)
        w = _draw(gen, std, (rank, fan_in), spec.dist_shape)
        b = _draw(gen, std, (rank,), spec.dist_shape)
        return w, b
    if spec.scheme == "sphere":
        raw = gen.normal(size=(rank, fan_in + 1))
        raw /= np.linalg.norm(raw, axis=1, keepdims=True)
        w = raw[:, :fan_in]
        b = np.abs(raw[:, fan_in]) - 1.0 / np.sqrt(rank * fan_in)
        return w, b
    # many_regions: one direction per unit, features on the upper unit
    # semicircle so all K are upper vertices.  A per-unit random phase keeps
    # the K-1 parallel breakpoint hyperplanes of different units in general
    # position; without it, equally spaced angles give two features equal
    # biases for odd K and every unit then has a hyperplane through the
    # origin, losing regions to the concurrency.
    std = maxout_he_std(rank, fan_in, "normal" if rank <= 5 else "uniform")
    v = gen.normal(0.0, std, size=fan_in)
    phase = gen.uniform(0.0, 1.0)
    theta = np.pi * (np.arange(1, rank + 1) - phase) / rank
    w = np.outer(np.cos(theta), v)
    b = np.sin(theta)
    if spec.noise > 0:
        w = w + gen.normal(0.0, spec.noise, size=w.shape)
        b = b + gen.normal(0.0, spec.noise, size=b.shape)
    return w, b


def steinwart_offset(spec, n0):
    """The offset c applied by the shift; the network becomes x -> f(x + c).

    Deterministic in spec.seed, so callers can recover the translation.
    """
    if spec.steinwart_shift is None:
        return np.zeros(n0)
    gen = _unit_rng(spec.seed, _KEY_SHIFT)
    if spec.steinwart_shift == "cube":
        return gen.uniform(-1.0, 1.0, size=n0)
    points = np.asarray(spec.data_points, dtype=float)
    weights = gen.dirichlet(np.ones(len(points)))
    return weights @ points


def sample(arch: Architecture, spec: InitSpec) -> Parameters:
    """Draw Parameters for the architecture according to the spec."""
    hidden_w, hidden_b = [], []
    for l in range(arch.depth):
        fan_in = arch.layer_input_dim(l)
        w = np.empty((arch.widths[l], arch.rank, fan_in))
        b = np.empty((arch.widths[l], arch.rank))
        for u in range(arch.widths[l]):
            gen = _unit_rng(spec.seed, _KEY_HIDDEN, l, u)
            w[u], b[u] = _sample_unit(spec, gen, arch.rank, fan_in)
        hidden_w.append(w)
        hidden_b.append(b)

    if spec.steinwart_shift is not None and arch.depth > 0:
        # a single offset shared by the whole first layer, so the shifted
        # network is exactly a translate of the unshifted one
        c = steinwart_offset(spec, arch.n0)
        for u in range(arch.widths[0]):
            hidden_b[0][u] += hidden_w[0][u] @ c

    fan_out = arch.widths[-1] if arch.depth else arch.n0
    out_std = np.sqrt((2.0 if spec.scheme == "relu_he" else 1.0) / fan_out)
    gen = _unit_rng(spec.seed, _KEY_OUTPUT)
    out_w = gen.normal(0.0, out_std, size=(arch.out_dim, fan_out))
    out_b = gen.normal(0.0, out_std, size=arch.out_dim)

    params = Parameters(
        hidden_w=tuple(hidden_w),
        hidden_b=tuple(hidden_b),
        out_w=out_w,
        out_b=out_b,
    )
    if spec.zero_bias:
        params = params.with_zero_biases()
    params.validate(arch)
    return params


def _dominated_features(w_active, b_active, n_extra, gen, wiggle=1e-3):
    """Features strictly below the upper hull of the active ones."""
    centroid = w_active.mean(axis=0)
    floor = b_active.min() - 1.0
    w = centroid + wiggle * gen.normal(size=(n_extra, w_active.shape[1]))
    b = floor + wiggle * gen.normal(size=n_extra)
    return w, b


def construct_unit_rank_k(n0, rank, k, seed=0):
    """Single rank-K unit extensionally equal to a rank-k unit.

    The k active features are placed on the upper half-sphere in R^{n0+1},
    which makes each of them an upper vertex of the lifted polytope, so the
    unit has exactly k regions.  The remaining K-k features sit strictly
    below the hull and never attain the maximum.
    """
    if not 1 <= k <= rank:
        raise ValueError(f"need 1 <= k <= rank, got k={k} rank={rank}")
    gen = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(n0, rank, k)))
    raw = gen.normal(size=(k, n0 + 1))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    w_active = raw[:, :n0]
    b_active = np.abs(raw[:, n0])
    w = np.empty((rank, n0))
    b = np.empty(rank)
    w[:k], b[:k] = w_active, b_active
    if rank > k:
        w[k:], b[k:] = _dominated_features(w_active, b_active, rank - k, gen)
    arch = Architecture(n0, (1,), rank, 1)
    params = Parameters(
        hidden_w=(w[None, :, :],),
        hidden_b=(b[None, :],),
        out_w=np.ones((1, 1)),
        out_b=np.zeros(1),
    )
    return arch, params


def construct_layer_parallel(n0, ks, seed=0):
    """One maxout layer whose units have parallel-hyperplane loci.

    Unit i gets features w_j = (j/k_i) v_i, b_j = -(j/k_i + eps_i)^2 for
    j = 1..k_i: the strictly convex offset puts every feature on the upper
    envelope, giving k_i - 1 parallel breakpoint hyperplanes with generic
    normals v_i.  Units with k_i below the shared rank are padded with
    dominated copies of their first feature.
    """
    ks = [int(k) for k in ks]
    if any(k < 1 for k in ks):
        raise ValueError("all ranks must be >= 1")
    rank = max(ks)
    n1 = len(ks)
    w = np.empty((n1, rank, n0))
    b = np.empty((n1, rank))
    for i, k_i in enumerate(ks):
        gen = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
        v = gen.normal(size=n0)
        eps = gen.uniform(0.01, 0.1)
        j = np.arange(1, k_i + 1)
        w[i, :k_i] = np.outer(j / k_i, v)
        b[i, :k_i] = -((j / k_i + eps) ** 2)
        if k_i < rank:
            w[i, k_i:] = w[i, 0]
            b[i, k_i:] = b[i, 0] - 1.0
    arch = Architecture(n0, (n1,), rank, 1)
    params = Parameters(
        hidden_w=(w,),
        hidden_b=(b,),
        out_w=np.ones((1, n1)),
        out_b=np.zeros(1),
    )
    return arch, params
