"""Continuous piecewise linear functions on the real line and their ReLU realizations.

Three constructions live here:

* ``to_shallow_net``: a CPwL function with n breakpoints as a one-hidden-layer
  network of width n + 1.
* ``fit_samples``: a two-hidden-layer network of width vector
  ``[2 * n1, 2 * n2 + 1]`` interpolating ``n1 * (n2 + 1) + 1`` samples and
  linear between samples inside each group of ``n2 + 1`` consecutive ones.
* ``wide_to_deep``: trades the wide second layer of such a network for depth.

When all sample abscissae and values are dyadic rationals with few bits (as in
the bit extraction networks), every weight produced here is dyadic too and the
networks reproduce the samples without any rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstructionError, DimensionError
from .network import AffineLayer, ReluNetwork, breakpoints_1d

__all__ = [
    "PiecewiseLinear",
    "eval_pwl",
    "from_samples",
    "floor_gadget",
    "to_shallow_net",
    "fit_samples",
    "wide_to_deep",
]


@dataclass(frozen=True, eq=False)
class PiecewiseLinear:
    """CPwL function given by its breakpoints, the values there and the two outer slopes."""

    breakpoints: np.ndarray
    values: np.ndarray
    left_slope: float = 0.0
    right_slope: float = 0.0

    def __post_init__(self):
        bp = np.array(self.breakpoints, dtype=np.float64)
        vals = np.array(self.values, dtype=np.float64)
        if bp.ndim != 1 or bp.size == 0:
            raise ConstructionError("need at least one breakpoint")
        if vals.shape != bp.shape:
            raise ConstructionError("values must match breakpoints")
        if np.any(np.diff(bp) <= 0):
            raise ConstructionError("breakpoints must be strictly increasing")
        if not (np.all(np.isfinite(bp)) and np.all(np.isfinite(vals))):
            raise ConstructionError("breakpoints and values must be finite")
        bp.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "left_slope", float(self.left_slope))
        object.__setattr__(self, "right_slope", float(self.right_slope))

    @property
    def n_breakpoints(self) -> int:
        return self.breakpoints.size

    def segment_slopes(self) -> np.ndarray:
        """Slopes of the bounded segments between consecutive breakpoints."""
        return np.diff(self.values) / np.diff(self.breakpoints)

    def __call__(self, x):
        return eval_pwl(self, x)


def eval_pwl(f: PiecewiseLinear, x):
    x = np.asarray(x, dtype=np.float64)
    bp, vals = f.breakpoints, f.values
    y = np.interp(x, bp, vals)
    y = np.where(x < bp[0], vals[0] + f.left_slope * (x - bp[0]), y)
    y = np.where(x > bp[-1], vals[-1] + f.right_slope * (x - bp[-1]), y)
    return y if y.ndim else float(y)


def from_samples(xs, ys, left_slope=None, right_slope=None) -> PiecewiseLinear:
    """Interpolant of the samples; outer slopes default to the adjacent segments."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.size >= 2:
        first = (ys[1] - ys[0]) / (xs[1] - xs[0])
        last = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
    else:
        first = last = 0.0
    return PiecewiseLinear(
        xs, ys,
        first if left_slope is None else left_slope,
        last if right_slope is None else right_slope,
    )


def floor_gadget(levels: int, delta: float) -> PiecewiseLinear:
    """Staircase equal to ``k`` on ``[k, k + 1 - delta]`` for ``k < levels``.

    Between plateaus it ramps linearly; beyond the first and last plateau it is
    flat.  It has ``2 * levels - 2`` breakpoints.
    """
    if levels < 2:
        raise ConstructionError("floor gadget needs at least two levels")
    if not 0 < delta < 1:
        raise ConstructionError("delta must lie in (0, 1)")
    ks = np.arange(levels, dtype=np.float64)
    xs = np.empty(2 * levels)
    xs[0::2] = ks
    xs[1::2] = ks + 1 - delta
    ys = np.repeat(ks, 2)
    return PiecewiseLinear(xs[1:-1], ys[1:-1], 0.0, 0.0)


def to_shallow_net(f: PiecewiseLinear) -> ReluNetwork:
    """One-hidden-layer network of width ``n + 1`` computing ``f`` exactly.

    Hidden units are ``relu(x0 - x)``, ``relu(x - x0)`` and ``relu(x - x_i)``
    for the remaining breakpoints; the readout holds slopes and slope changes.
    """
    bp = f.breakpoints
    n = bp.size
    slopes = np.concatenate([f.segment_slopes(), [f.right_slope]])
    w1 = np.concatenate([[-1.0], np.ones(n)])[:, None]
    b1 = np.concatenate([[bp[0]], -bp])
    w2 = np.empty(n + 1)
    w2[0] = -f.left_slope
    w2[1] = slopes[0]
    w2[2:] = np.diff(slopes)
    return ReluNetwork((
        AffineLayer(w1, b1),
        AffineLayer(w2[None, :], [f.values[0]]),
    ))


def fit_samples(xs, ys, n1: int, n2: int) -> ReluNetwork:
    """Two-hidden-layer network interpolating ``n1 * (n2 + 1) + 1`` samples.

    The samples split into ``n1`` groups of ``n2 + 2`` points sharing their
    end points.  Inside a group the network is the linear interpolant of its
    first ``n2 + 1`` points; the last interval of each group is a free
    transition that may take any continuous shape.

    The first hidden layer holds ``2 * n1`` hinges placed left of the data and
    inside the transition intervals, which lets every second-layer
    pre-activation be an independent affine function on each group.  The
    second layer then spends two units on a group's base line (a positive and
    a negative copy, offset to stay active) and one signed pair per interior
    breakpoint, with the unused member of each pair held at -1.  The last of
    the ``2 * n2 + 1`` units is unused.  With ``n2 = 0`` every group is a
    single point and one unit suffices because the samples are non-negative.

    Args:
        xs: strictly increasing sample abscissae.
        ys: non-negative sample values.
        n1: number of groups.
        n2: samples per group minus one (the group's linear pieces).

    Returns:
        Network with width vector ``(2 * n1, 2 * n2 + 1)``.
    """
    if n1 < 1 or n2 < 0:
        raise ConstructionError("need n1 >= 1 and n2 >= 0")
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    count = n1 * (n2 + 1) + 1
    if xs.shape != (count,) or ys.shape != (count,):
        raise ConstructionError(f"need exactly {count} samples for n1={n1}, n2={n2}")
    if np.any(np.diff(xs) <= 0):
        raise ConstructionError("sample abscissae must be strictly increasing")
    if np.any(ys < 0):
        raise ConstructionError("sample values must be non-negative")

    step = n2 + 1
    starts = [j * step for j in range(n1)]
    n_units = 2 * n2 + 1
    # per unit and group: value at the group's first sample and slope
    nu = np.zeros((n_units, n1))
    al = np.zeros((n_units, n1))
    final = np.zeros(n_units)
    v = np.zeros(n_units)
    v[0] = 1.0
    if n2:
        v[1] = -1.0
    for q in range(1, n2):
        v[2 * q], v[2 * q + 1] = 1.0, -1.0
    if n2 == 0:
        # single-point groups: one unit whose pre-activation equals the sample
        v[:] = 1.0
        nu[0] = ys[starts]
        final[0] = ys[-1]
    for j, s in enumerate(starts if n2 else []):
        gx, gy = xs[s:s + n2 + 1], ys[s:s + n2 + 1]
        sl = np.diff(gy) / np.diff(gx)
        base_right = gy[0] + sl[0] * (gx[-1] - gx[0])
        lift = max(0.0, -gy[0], -base_right) + 1.0
        nu[0, j], al[0, j] = gy[0] + lift, sl[0]
        nu[1, j] = lift
        for q in range(1, n2):
            change = sl[q] - sl[q - 1]
            on, off = (2 * q, 2 * q + 1) if change >= 0 else (2 * q + 1, 2 * q)
            nu[off, j] = -1.0
            if change == 0:
                nu[on, j] = -1.0
            else:
                al[on, j] = abs(change)
                nu[on, j] = -abs(change) * (gx[q] - gx[0])
    if n2:
        final[0] = ys[-1] + 1.0
        final[1] = 1.0
        final[2:2 * n2] = -1.0

    # first-layer hinges
    thresholds = [xs[0] - 1.0]
    for j in range(n1 - 1):
        e = starts[j] + n2
        gap = xs[e + 1] - xs[e]
        thresholds += [xs[e] + gap / 4, xs[e] + 3 * gap / 4]
    gap = xs[-1] - xs[-2]
    thresholds.append(xs[-2] + gap / 2)
    thresholds = np.array(thresholds)

    def line(u, j, x):
        return nu[u, j] + al[u, j] * (x - xs[starts[j]])

    w2 = np.zeros((n_units, 2 * n1))
    b2 = np.zeros(n_units)
    for u in range(max(n_units - 1, 1)):
        w2[u, 0] = al[u, 0]
        b2[u] = nu[u, 0] - al[u, 0] * (xs[0] - thresholds[0])
        for j in range(n1 - 1):
            ta, tb = thresholds[1 + 2 * j], thresholds[2 + 2 * j]
            jump = line(u, j + 1, tb) - line(u, j, tb)
            wa = jump / (tb - ta)
            w2[u, 1 + 2 * j] = wa
            w2[u, 2 + 2 * j] = (al[u, j + 1] - al[u, j]) - wa
        tail = final[u] - line(u, n1 - 1, xs[-1])
        w2[u, -1] = tail / (xs[-1] - thresholds[-1])

    return ReluNetwork((
        AffineLayer(np.ones((2 * n1, 1)), -thresholds),
        AffineLayer(w2, b2),
        AffineLayer(v[None, :], [0.0]),
    ))


def _pow2_at_least(x: float) -> float:
    return 2.0 ** max(0, math.ceil(math.log2(x))) if x > 1 else 1.0


def wide_to_deep(net: ReluNetwork, bound: float, stage_width: int | None = None) -> ReluNetwork:
    """Re-express a two-hidden-layer scalar network with a narrow, deeper one.

    The second hidden layer is evaluated in stages of ``stage_width`` units.
    First-layer activations are non-negative, so they are carried forward
    unchanged; the running output sum rides in one channel shifted by a power
    of two that bounds it on ``[-bound, bound]^d``.  With ``S`` stages the
    result has depth ``S + 1`` and width at most ``2 * stage_width + 1``.

    Args:
        net: network with two hidden layers and scalar output.
        bound: inputs are assumed to lie in ``[-bound, bound]`` per coordinate.
        stage_width: units per stage, at least the first hidden width.
    """
    if net.depth != 2 or net.output_dim != 1:
        raise DimensionError("wide_to_deep needs two hidden layers and a scalar output")
    l0, l1, l2 = net.layers
    n_first, n_second = l0.rows, l1.rows
    stage = n_first if stage_width is None else int(stage_width)
    if stage < n_first:
        raise DimensionError(f"stage width {stage} is below first hidden width {n_first}")
    stages = -(-n_second // stage)
    if stages <= 1:
        return net
    v = l2.weights[0]
    groups = [np.arange(t * stage, min((t + 1) * stage, n_second)) for t in range(stages)]

    # largest |running sum| over the domain, exact for scalar input
    if net.input_dim == 1:
        pts = breakpoints_1d(net, -bound, bound)[:, None]
        h1 = np.maximum(l0.apply(pts), 0.0)
    else:
        corner = np.abs(l0.weights).sum(axis=1) * bound + np.abs(l0.bias)
        h1 = np.vstack([np.zeros(n_first), corner])
    if net.input_dim == 1:
        u = np.maximum(l1.apply(h1), 0.0) * v
        partial = np.cumsum([u[:, g].sum(axis=1) for g in groups[:-1]], axis=0)
        peak = float(np.abs(partial).max())
    else:
        u_hi = np.abs(l1.weights) @ h1[1] + np.abs(l1.bias)
        peak = float(np.abs(v) @ u_hi)
    shift = _pow2_at_least(2 * peak + 1)

    layers = [AffineLayer(l0.weights, l0.bias)]
    eye = np.eye(n_first)
    prev_units = 0      # stage units at the front of the previous hidden layer
    prev_acc = False    # whether the previous hidden layer ends in the sum channel
    for t, g in enumerate(groups):
        prev_width = layers[-1].rows
        h1_at = prev_units  # carried first-layer block starts after stage units
        blocks_w, blocks_b = [], []
        w = np.zeros((g.size, prev_width))
        w[:, h1_at:h1_at + n_first] = l1.weights[g]
        blocks_w.append(w)
        blocks_b.append(l1.bias[g])
        if t < stages - 1:
            w = np.zeros((n_first, prev_width))
            w[:, h1_at:h1_at + n_first] = eye
            blocks_w.append(w)
            blocks_b.append(np.zeros(n_first))
        if t >= 1:
            w = np.zeros((1, prev_width))
            w[0, :prev_units] = v[groups[t - 1]]
            if prev_acc:
                w[0, -1] = 1.0
            blocks_w.append(w)
            blocks_b.append([0.0 if prev_acc else shift])
        layers.append(AffineLayer(np.vstack(blocks_w), np.concatenate(blocks_b)))
        prev_units, prev_acc = g.size, t >= 1
    out = np.zeros((1, layers[-1].rows))
    out[0, :prev_units] = v[groups[-1]]
    out[0, -1] = 1.0
    layers.append(AffineLayer(out, l2.bias - shift))
    return ReluNetwork(tuple(layers))
