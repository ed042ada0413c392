"""Fully connected ReLU networks and the algebra used to assemble them.

A network is a chain of affine layers with ReLU between consecutive layers and
no activation after the last one.  Arithmetic is float64; each affine map sums
its products in increasing column order and adds the bias last, so results are
reproducible bit for bit on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from numba import njit

from .errors import DimensionError

__all__ = [
    "AffineLayer",
    "ReluNetwork",
    "NetworkStats",
    "evaluate",
    "evaluate_scalar",
    "affine_net",
    "identity_net",
    "select_net",
    "carry_net",
    "pad_depth",
    "compose_serial",
    "stack_parallel",
    "widen_with_passthrough",
    "stats",
    "breakpoints_1d",
]


@njit(cache=True)
def _csr_affine(indptr, indices, data, bias, h, out):
    # strict left-to-right sum over nonzero columns, bias added last
    n = h.shape[0]
    rows = bias.shape[0]
    for p in range(n):
        for i in range(rows):
            acc = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                acc += data[k] * h[p, indices[k]]
            out[p, i] = acc + bias[i]


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class AffineLayer:
    """Affine map ``x -> W x + b`` with ``W`` of shape (rows, cols)."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights)
        b = _frozen(self.bias)
        if w.ndim != 2:
            raise DimensionError(f"weights must be 2-d, got shape {w.shape}")
        if b.shape != (w.shape[0],):
            raise DimensionError(f"bias shape {b.shape} does not match {w.shape[0]} rows")
        if w.shape[0] == 0 or w.shape[1] == 0:
            raise DimensionError("layers must have at least one row and one column")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("weights and bias must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def rows(self) -> int:
        return self.weights.shape[0]

    @property
    def cols(self) -> int:
        return self.weights.shape[1]

    @cached_property
    def _csr(self):
        # zero weights are skipped: adding an exact zero never changes a sum
        mask = self.weights != 0
        indptr = np.concatenate([[0], np.cumsum(mask.sum(axis=1))]).astype(np.int64)
        rows, cols = np.nonzero(mask)
        return indptr, cols.astype(np.int64), self.weights[rows, cols].copy()

    def apply(self, h: np.ndarray) -> np.ndarray:
        """Apply the map to a batch ``h`` of shape (n, cols)."""
        h = np.ascontiguousarray(h, dtype=np.float64)
        out = np.empty((h.shape[0], self.rows))
        indptr, indices, data = self._csr
        _csr_affine(indptr, indices, data, self.bias, h, out)
        return out

    def same_as(self, other: "AffineLayer") -> bool:
        return (
            self.weights.shape == other.weights.shape
            and self.weights.tobytes() == other.weights.tobytes()
            and self.bias.tobytes() == other.bias.tobytes()
        )


@dataclass(frozen=True)
class NetworkStats:
    input_dim: int
    output_dim: int
    depth: int
    width: int
    width_vec: tuple
    param_count: int

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "output_dim": self.output_dim,
            "depth": self.depth,
            "width": self.width,
            "width_vec": list(self.width_vec),
            "param_count": self.param_count,
        }


@dataclass(frozen=True, eq=False)
class ReluNetwork:
    """Immutable ReLU network.

    ``depth`` counts hidden layers, ``width`` is the largest hidden layer.
    Equality is bitwise on every weight and bias, plus metadata.
    """

    layers: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise DimensionError("a network needs at least one affine layer")
        for k in range(1, len(layers)):
            if layers[k].cols != layers[k - 1].rows:
                raise DimensionError(
                    f"layer {k} expects {layers[k].cols} inputs but layer {k - 1} "
                    f"produces {layers[k - 1].rows}"
                )
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def input_dim(self) -> int:
        return self.layers[0].cols

    @property
    def output_dim(self) -> int:
        return self.layers[-1].rows

    @property
    def depth(self) -> int:
        return len(self.layers) - 1

    @property
    def width_vec(self) -> tuple:
        return tuple(layer.rows for layer in self.layers[:-1])

    @property
    def width(self) -> int:
        return max(self.width_vec, default=0)

    @property
    def param_count(self) -> int:
        return sum(layer.rows * (layer.cols + 1) for layer in self.layers)

    def with_metadata(self, **extra) -> "ReluNetwork":
        meta = dict(self.metadata)
        meta.update(extra)
        return ReluNetwork(self.layers, meta)

    def __eq__(self, other):
        if not isinstance(other, ReluNetwork):
            return NotImplemented
        return (
            len(self.layers) == len(other.layers)
            and all(a.same_as(b) for a, b in zip(self.layers, other.layers))
            and self.metadata == other.metadata
        )

    __hash__ = None

    def __call__(self, x):
        return evaluate(self, x)


def evaluate(net: ReluNetwork, x) -> np.ndarray:
    """Evaluate ``net`` on one point (1-d input) or a batch (2-d, one row per point)."""
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != net.input_dim:
        raise DimensionError(
            f"expected input of dimension {net.input_dim}, got array of shape {np.shape(x)}"
        )
    h = arr
    last = len(net.layers) - 1
    for k, layer in enumerate(net.layers):
        h = layer.apply(h)
        if k < last:
            np.maximum(h, 0.0, out=h)
    return h[0] if single else h


def evaluate_scalar(net: ReluNetwork, xs) -> np.ndarray:
    """Evaluate a one-input, one-output network on a 1-d array of points."""
    if net.input_dim != 1 or net.output_dim != 1:
        raise DimensionError("evaluate_scalar needs a network with scalar input and output")
    xs = np.asarray(xs, dtype=np.float64)
    return evaluate(net, xs.reshape(-1, 1))[:, 0].reshape(xs.shape)


def affine_net(weights, bias=None) -> ReluNetwork:
    w = np.atleast_2d(np.asarray(weights, dtype=np.float64))
    b = np.zeros(w.shape[0]) if bias is None else bias
    return ReluNetwork((AffineLayer(w, b),))


def identity_net(dim: int) -> ReluNetwork:
    return affine_net(np.eye(dim))


def select_net(input_dim: int, indices: Sequence[int]) -> ReluNetwork:
    """Affine map picking the listed coordinates of the input."""
    w = np.zeros((len(indices), input_dim))
    for r, c in enumerate(indices):
        w[r, c] = 1.0
    return affine_net(w)


def carry_net(dim: int, depth: int, bound: float | None = None) -> ReluNetwork:
    """ReLU network of the given depth computing the identity.

    With ``bound=None`` each coordinate travels as the pair ``relu(v), relu(-v)``
    which is exact for every input.  With a numeric bound ``B`` each coordinate
    uses one channel ``relu(v + B)`` and is exact whenever ``v >= -B``.
    """
    if depth == 0:
        return identity_net(dim)
    eye = np.eye(dim)
    if bound is None:
        first = AffineLayer(np.vstack([eye, -eye]), np.zeros(2 * dim))
        mid = AffineLayer(np.eye(2 * dim), np.zeros(2 * dim))
        last = AffineLayer(np.hstack([eye, -eye]), np.zeros(dim))
    else:
        if bound < 0:
            raise ValueError("passthrough bound must be non-negative")
        first = AffineLayer(eye, np.full(dim, float(bound)))
        mid = AffineLayer(eye, np.zeros(dim))
        last = AffineLayer(eye, np.full(dim, -float(bound)))
    return ReluNetwork((first,) + (mid,) * (depth - 1) + (last,))


def compose_serial(*nets: ReluNetwork) -> ReluNetwork:
    """Run networks one after another, merging the affine maps at each seam.

    The depth of the result is the sum of the depths.
    """
    if not nets:
        raise ValueError("compose_serial needs at least one network")
    out = nets[0]
    for nxt in nets[1:]:
        if out.output_dim != nxt.input_dim:
            raise DimensionError(
                f"cannot feed {out.output_dim} outputs into a network with "
                f"{nxt.input_dim} inputs"
            )
        a, b = out.layers[-1], nxt.layers[0]
        # same summation order as evaluation, independent of the BLAS in use
        w = AffineLayer(b.weights, np.zeros(b.rows)).apply(a.weights.T).T
        bias = b.apply(a.bias[None, :])[0]
        merged = AffineLayer(w, bias)
        out = ReluNetwork(out.layers[:-1] + (merged,) + nxt.layers[1:])
    return out


def pad_depth(net: ReluNetwork, depth: int, bound: float | None = None) -> ReluNetwork:
    """Extend ``net`` to ``depth`` hidden layers by carrying its outputs."""
    if depth < net.depth:
        raise ValueError(f"cannot pad depth {net.depth} down to {depth}")
    if depth == net.depth:
        return net
    return compose_serial(net, carry_net(net.output_dim, depth - net.depth, bound))


def _block_diag(mats):
    rows = sum(m.shape[0] for m in mats)
    cols = sum(m.shape[1] for m in mats)
    out = np.zeros((rows, cols))
    r = c = 0
    for m in mats:
        out[r:r + m.shape[0], c:c + m.shape[1]] = m
        r += m.shape[0]
        c += m.shape[1]
    return out


def stack_parallel(nets: Sequence[ReluNetwork], shared_input: bool = True,
                   bound: float | None = None) -> ReluNetwork:
    """Run networks side by side and concatenate their outputs.

    With ``shared_input`` every network reads the same input vector, otherwise
    the input is the concatenation of the individual inputs.  Shallower
    networks are padded with passthrough channels first (see ``carry_net``).
    """
    nets = list(nets)
    if not nets:
        raise ValueError("stack_parallel needs at least one network")
    if shared_input and len({n.input_dim for n in nets}) != 1:
        raise DimensionError("shared-input stacking needs equal input dimensions")
    depth = max(n.depth for n in nets)
    nets = [pad_depth(n, depth, bound) for n in nets]
    layers = []
    for k in range(depth + 1):
        ws = [n.layers[k].weights for n in nets]
        bs = np.concatenate([n.layers[k].bias for n in nets])
        if k == 0 and shared_input:
            w = np.vstack(ws)
        else:
            w = _block_diag(ws)
        layers.append(AffineLayer(w, bs))
    return ReluNetwork(tuple(layers))


def widen_with_passthrough(net: ReluNetwork, extra_inputs: int, bound: float) -> ReluNetwork:
    """Append ``extra_inputs`` inputs that are carried unchanged to extra outputs.

    Each carried signal ``v`` costs one unit per hidden layer and is exact when
    ``v >= -bound``.
    """
    if extra_inputs == 0:
        return net
    return stack_parallel([net, carry_net(extra_inputs, net.depth, bound)], shared_input=False)


def stats(net: ReluNetwork) -> NetworkStats:
    return NetworkStats(
        input_dim=net.input_dim,
        output_dim=net.output_dim,
        depth=net.depth,
        width=net.width,
        width_vec=net.width_vec,
        param_count=net.param_count,
    )


def breakpoints_1d(net: ReluNetwork, lo: float, hi: float) -> np.ndarray:
    """Points of ``[lo, hi]`` where a scalar-input network may change slope.

    Every neuron is affine between consecutive returned points, so extrema of
    any linear readout over the interval occur at these points.
    """
    if net.input_dim != 1:
        raise DimensionError("breakpoints_1d needs a scalar-input network")
    pts = np.array([float(lo), float(hi)])
    h_layers = net.layers[:-1]
    for k in range(len(h_layers)):
        h = pts[:, None]
        for layer in h_layers[:k]:
            h = np.maximum(layer.apply(h), 0.0)
        z = h_layers[k].apply(h)
        z0, z1 = z[:-1], z[1:]
        cross = (z0 * z1) < 0
        if cross.any():
            i, u = np.nonzero(cross)
            frac = z0[i, u] / (z0[i, u] - z1[i, u])
            new = pts[i] + frac * (pts[i + 1] - pts[i])
            pts = np.unique(np.concatenate([pts, new]))
    return pts
