"""Maxout network architectures, parameters and evaluation.

A network maps R^{n0} -> R^{M} as a chain of maxout layers followed by a
linear output layer.  Every hidden unit computes the maximum of K affine
functions ("features") of the previous layer's output.  All evaluation
routines here are pure functions of immutable arrays and are safe to call
concurrently.

Feature indices are 0-based throughout.  Argmax ties are broken towards the
smallest feature index, which makes every operation deterministic.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Architecture",
    "Parameters",
    "AffineMap",
    "ShapeMismatchError",
    "CollinearPointsError",
    "forward",
    "activation_pattern",
    "region_affine_map",
    "gradient",
    "slice_network",
]


class ShapeMismatchError(ValueError):
    """Parameter/input shapes disagree with the architecture."""

    def __init__(self, message, layer=None, unit=None):
        super().__init__(message)
        self.layer = layer
        self.unit = unit


class CollinearPointsError(ValueError):
    """The three slice anchor points are affinely dependent."""


@dataclass(frozen=True)
class Architecture:
    """Shape of a maxout network.

    n0       input dimension
    widths   hidden layer widths n1..nL (may be empty: bare linear map)
    rank     maxout rank K shared by all hidden units
    out_dim  number of linear output units M
    """

    n0: int
    widths: tuple
    rank: int
    out_dim: int

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if self.n0 < 1:
            raise ValueError(f"n0 must be positive, got {self.n0}")
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")
        if self.out_dim < 1:
            raise ValueError(f"out_dim must be positive, got {self.out_dim}")
        if any(w < 1 for w in self.widths):
            raise ValueError(f"all hidden widths must be positive: {self.widths}")

    @property
    def depth(self):
        return len(self.widths)

    @property
    def total_units(self):
        return sum(self.widths)

    def layer_input_dim(self, layer):
        """Fan-in of hidden layer `layer` (0-based)."""
        return self.n0 if layer == 0 else self.widths[layer - 1]


@dataclass(frozen=True)
class Parameters:
    """Weights and biases matching an Architecture.

    hidden_w[l] has shape (n_l, K, n_{l-1}) and hidden_b[l] shape (n_l, K).
    out_w has shape (M, n_L) and out_b shape (M,).
    """

    hidden_w: tuple
    hidden_b: tuple
    out_w: np.ndarray
    out_b: np.ndarray

    def validate(self, arch: Architecture):
        if len(self.hidden_w) != arch.depth or len(self.hidden_b) != arch.depth:
            raise ShapeMismatchError(
                f"expected {arch.depth} hidden layers, got "
                f"{len(self.hidden_w)} weight / {len(self.hidden_b)} bias blocks"
            )
        for l, (w, b) in enumerate(zip(self.hidden_w, self.hidden_b)):
            want = (arch.widths[l], arch.rank, arch.layer_input_dim(l))
            if w.shape != want:
                raise ShapeMismatchError(
                    f"layer {l}: weight shape {w.shape} != {want}", layer=l
                )
            if b.shape != want[:2]:
                raise ShapeMismatchError(
                    f"layer {l}: bias shape {b.shape} != {want[:2]}", layer=l
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ShapeMismatchError(f"layer {l}: non-finite entries", layer=l)
        last = arch.widths[-1] if arch.depth else arch.n0
        if self.out_w.shape != (arch.out_dim, last):
            raise ShapeMismatchError(
                f"output weight shape {self.out_w.shape} != {(arch.out_dim, last)}"
            )
        if self.out_b.shape != (arch.out_dim,):
            raise ShapeMismatchError(
                f"output bias shape {self.out_b.shape} != {(arch.out_dim,)}"
            )
        if not (np.all(np.isfinite(self.out_w)) and np.all(np.isfinite(self.out_b))):
            raise ShapeMismatchError("output layer: non-finite entries")

    def with_zero_biases(self):
        return Parameters(
            hidden_w=self.hidden_w,
            hidden_b=tuple(np.zeros_like(b) for b in self.hidden_b),
            out_w=self.out_w,
            out_b=np.zeros_like(self.out_b),
        )


@dataclass(frozen=True)
class AffineMap:
    """x -> a @ x + c."""

    a: np.ndarray
    c: np.ndarray

    @staticmethod
    def identity(dim):
        return AffineMap(np.eye(dim), np.zeros(dim))

    def apply(self, x):
        return self.a @ np.asarray(x, dtype=float) + self.c

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """self after inner: x -> self(inner(x))."""
        return AffineMap(self.a @ inner.a, self.a @ inner.c + self.c)


def _check_input(arch, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (arch.n0,):
        raise ShapeMismatchError(f"input shape {x.shape} != ({arch.n0},)")
    if not np.all(np.isfinite(x)):
        raise ShapeMismatchError("input has non-finite entries")
    return x


def forward(arch, params, x):
    """Evaluate the network at a single point, returning a vector in R^M."""
    x = _check_input(arch, x)
    params.validate(arch)
    h = x
    for w, b in zip(params.hidden_w, params.hidden_b):
        pre = np.einsum("ukp,p->uk", w, h) + b
        h = pre.max(axis=1)
    return params.out_w @ h + params.out_b


def activation_pattern(arch, params, x):
    """Per-unit argmax feature indices, as a tuple of per-layer tuples.

    Exact ties go to the smallest feature index (np.argmax convention).
    """
    x = _check_input(arch, x)
    params.validate(arch)
    h = x
    pattern = []
    for w, b in zip(params.hidden_w, params.hidden_b):
        pre = np.einsum("ukp,p->uk", w, h) + b
        idx = pre.argmax(axis=1)
        pattern.append(tuple(int(i) for i in idx))
        h = pre.max(axis=1)
    return tuple(pattern)


def region_affine_map(arch, params, pattern):
    """Affine map R^{n0} -> R^M computed on the region with this pattern.

    Selecting one feature per unit fixes each layer to an affine map; the
    composition with the linear output layer is returned.
    """
    params.validate(arch)
    if len(pattern) != arch.depth:
        raise ShapeMismatchError(
            f"pattern has {len(pattern)} layers, expected {arch.depth}"
        )
    amap = AffineMap.identity(arch.n0)
    for l, (w, b) in enumerate(zip(params.hidden_w, params.hidden_b)):
        idx = np.asarray(pattern[l], dtype=int)
        if idx.shape != (arch.widths[l],) or idx.min(initial=0) < 0 or idx.max(
            initial=0
        ) >= arch.rank:
            raise ShapeMismatchError(f"invalid pattern for layer {l}", layer=l)
        w_sel = w[np.arange(arch.widths[l]), idx, :]
        b_sel = b[np.arange(arch.widths[l]), idx]
        amap = AffineMap(w_sel, b_sel).compose(amap)
    return AffineMap(params.out_w, params.out_b).compose(amap)


def gradient(arch, params, x):
    """Jacobian of the network at x, shape (M, n0).

    At points on a region boundary the tie-break pattern's gradient is
    returned; the caller is responsible for staying off boundaries when a
    two-sided derivative is required.
    """
    return region_affine_map(arch, params, activation_pattern(arch, params, x)).a


def slice_plane(p1, p2, p3):
    """Orthonormal parametrization of the 2-plane through three points.

    Returns (v0, v1, v2) with v0 the centroid and v1, v2 an orthonormal
    basis of span{p2-p1, p3-p1}, v1 along p2-p1.
    """
    p1, p2, p3 = (np.asarray(p, dtype=float) for p in (p1, p2, p3))
    u1 = p2 - p1
    u2 = p3 - p1
    scale = max(np.linalg.norm(u1), np.linalg.norm(u2), 1.0)
    if np.linalg.norm(u1) <= 1e-12 * scale:
        raise CollinearPointsError("p1 and p2 coincide")
    v1 = u1 / np.linalg.norm(u1)
    resid = u2 - (u2 @ v1) * v1
    if np.linalg.norm(resid) <= 1e-10 * scale:
        raise CollinearPointsError("slice points are collinear")
    v2 = resid / np.linalg.norm(resid)
    v0 = (p1 + p2 + p3) / 3.0
    return v0, v1, v2


def slice_network(arch, params, p1, p2, p3):
    """Restrict the network to the 2-plane through p1, p2, p3.

    The plane is parametrized as x = v0 + v1*y1 + v2*y2 and the affine
    reparametrization is absorbed into the first layer, so the result is a
    network with the same widths and n0' = 2.
    """
    params.validate(arch)
    v0, v1, v2 = slice_plane(p1, p2, p3)
    basis = np.stack([v1, v2], axis=1)  # (n0, 2)
    if arch.depth == 0:
        new_arch = Architecture(2, (), arch.rank, arch.out_dim)
        new_params = Parameters(
            hidden_w=(),
            hidden_b=(),
            out_w=params.out_w @ basis,
            out_b=params.out_w @ v0 + params.out_b,
        )
        return new_arch, new_params
    w0, b0 = params.hidden_w[0], params.hidden_b[0]
    new_w0 = np.einsum("ukp,pq->ukq", w0, basis)
    new_b0 = np.einsum("ukp,p->uk", w0, v0) + b0
    new_arch = Architecture(2, arch.widths, arch.rank, arch.out_dim)
    new_params = Parameters(
        hidden_w=(new_w0,) + tuple(params.hidden_w[1:]),
        hidden_b=(new_b0,) + tuple(params.hidden_b[1:]),
        out_w=params.out_w,
        out_b=params.out_b,
    )
    return new_arch, new_params


# --- serialization ---------------------------------------------------------

def to_dict(arch, params):
    """JSON-ready document for a network; floats keep full precision."""
    hidden = []
    for w, b in zip(params.hidden_w, params.hidden_b):
        layer = []
        for u in range(w.shape[0]):
            layer.append(
                [{"w": w[u, k].tolist(), "b": float(b[u, k])} for k in range(w.shape[1])]
            )
        hidden.append(layer)
    return {
        "n0": arch.n0,
        "widths": list(arch.widths),
        "rank": arch.rank,
        "out_dim": arch.out_dim,
        "hidden": hidden,
        "output": {"W": params.out_w.tolist(), "b": params.out_b.tolist()},
    }


def from_dict(doc):
    arch = Architecture(
        n0=int(doc["n0"]),
        widths=tuple(doc["widths"]),
        rank=int(doc["rank"]),
        out_dim=int(doc["out_dim"]),
    )
    hidden_w, hidden_b = [], []
    for l, layer in enumerate(doc["hidden"]):
        prev = arch.layer_input_dim(l)
        w = np.empty((len(layer), arch.rank, prev))
        b = np.empty((len(layer), arch.rank))
        for u, unit in enumerate(layer):
            for k, feat in enumerate(unit):
                w[u, k] = feat["w"]
                b[u, k] = feat["b"]
        hidden_w.append(w)
        hidden_b.append(b)
    params = Parameters(
        hidden_w=tuple(hidden_w),
        hidden_b=tuple(hidden_b),
        out_w=np.asarray(doc["output"]["W"], dtype=float),
        out_b=np.asarray(doc["output"]["b"], dtype=float),
    )
    params.validate(arch)
    return arch, params


def to_json(arch, params):
    return json.dumps(to_dict(arch, params))


def from_json(text):
    return from_dict(json.loads(text))
