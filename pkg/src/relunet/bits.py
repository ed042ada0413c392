"""Networks that store bit strings in weights and read back prefix sums.

All constructions here use dyadic weights and biases.  On integer indices
their outputs are therefore exact, provided the bit strings are short enough
for every intermediate value to fit in a float64 mantissa.  Builders verify
this on their sample indices and raise ``PrecisionError`` otherwise.
"""

from __future__ import annotations

import math

import numpy as np

from . import network as nn
from .cpwl import fit_samples, floor_gadget, to_shallow_net, wide_to_deep
from .errors import ConstructionError, PrecisionError
from .step import ilog3

__all__ = [
    "MAX_BITS",
    "bin_value",
    "min_net",
    "build_bits_width",
    "build_bits_width_depth",
    "build_bit_extraction_multi",
    "quantize",
    "increment_tables",
    "build_point_fitter_2d",
    "build_point_fitter",
    "bits_width_bounds",
    "bits_width_depth_bounds",
    "bit_extraction_multi_bounds",
    "point_fitter_2d_bounds",
    "point_fitter_bounds",
]

MAX_BITS = 50


def bin_value(bits) -> float:
    """Value of the binary fraction ``0.b1 b2 ... bn``."""
    bits = np.asarray(bits, dtype=np.int64)
    return float(sum(int(b) * 2.0 ** -(j + 1) for j, b in enumerate(bits)))


def _check_int(name, val, lo=1, hi=None):
    if not isinstance(val, (int, np.integer)) or isinstance(val, bool) or val < lo:
        raise ConstructionError(f"{name} must be an integer >= {lo}, got {val!r}")
    if hi is not None and val > hi:
        raise ConstructionError(f"{name} must be at most {hi}, got {val}")


def _relu_units(offsets, index, input_dim) -> nn.ReluNetwork:
    """One hidden layer computing ``relu(x[index] - o)`` for each offset."""
    offsets = np.asarray(offsets, dtype=np.float64)
    w = np.zeros((offsets.size, input_dim))
    w[:, index] = 1.0
    return nn.ReluNetwork((nn.AffineLayer(w, -offsets),
                           nn.AffineLayer(np.eye(offsets.size), np.zeros(offsets.size))))


def _carry(indices, input_dim) -> nn.ReluNetwork:
    """Depth-one carry of non-negative coordinates."""
    return nn.compose_serial(nn.select_net(input_dim, indices),
                             nn.carry_net(len(indices), 1, 0.0))


def min_net() -> nn.ReluNetwork:
    """``min(a, b)`` with four hidden units, as half of ``(a + b) - |a - b|``."""
    w1 = np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])
    return nn.ReluNetwork((nn.AffineLayer(w1, np.zeros(4)),
                           nn.AffineLayer([[0.5, -0.5, -0.5, -0.5]], [0.0])))


def bits_width_bounds(n: int):
    return (n + 1) * 2 ** (n + 1), 3


def bits_width_depth_bounds(n: int, L: int):
    return (n + 3) * 2 ** (n + 1) + 4, 4 * L + 2


def bit_extraction_multi_bounds(N: int, L: int):
    return 6 * N + 14, 5 * L + 4


def point_fitter_2d_bounds(N: int, L: int):
    return 16 * N + 30, 5 * L + 7


def point_fitter_bounds(N: int, L: int):
    return 16 * N + 30, 6 * L + 10


def build_bits_width(n: int) -> nn.ReluNetwork:
    """Network ``(theta, i) -> theta_1 + ... + theta_i`` for an n-bit fraction theta.

    The j-th bit is ``floor(2^j theta) - 2 floor(2^(j-1) theta)``, each floor
    coming from a staircase evaluated on ``2^j theta``.  Indicators of
    ``j <= i`` are built from ``relu(i - j)`` differences and gate the bits.
    Depth 2, width ``(n + 1) 2^(n + 1)``.
    """
    _check_int("n", n, 1, 12)
    stair = to_shallow_net(floor_gadget(2 ** n, 2.0 ** -(n + 1)))
    parts = [nn.compose_serial(nn.affine_net([[2.0 ** j, 0.0]]), stair) for j in range(n + 1)]
    parts.append(_relu_units(np.arange(n + 1), 1, 2))
    first = nn.stack_parallel(parts, shared_input=True)
    # outputs: floors g_0..g_n, then u_j = relu(i - j)
    w = np.zeros((n, 2 * n + 2))
    for j in range(1, n + 1):
        w[j - 1, j] = 1.0
        w[j - 1, j - 1] = -2.0
        w[j - 1, n + 1 + j - 1] = 1.0
        w[j - 1, n + 1 + j] = -1.0
    gate = nn.ReluNetwork((nn.AffineLayer(w, -np.ones(n)),
                           nn.AffineLayer(np.ones((1, n)), [0.0])))
    net = nn.compose_serial(first, gate)
    return net.with_metadata(kind="bits_width", n=int(n))


def _peel_stage(n: int, stage: int, stair: nn.ReluNetwork,
                reader: nn.ReluNetwork) -> nn.ReluNetwork:
    """One block of ``n`` bits: state ``(r, k, S) -> (r', k, S')``."""
    scale = 2.0 ** n
    a = nn.stack_parallel([
        nn.compose_serial(nn.affine_net([[scale, 0.0, 0.0]]), stair),
        _carry([0], 3),
        _relu_units([stage * n], 1, 3),
        _carry([1, 2], 3),
    ])
    # (g, r, y, k, S) -> (block, rest, y, k, S)
    split = nn.affine_net([
        [1.0 / scale, 0, 0, 0, 0],
        [-1.0, scale, 0, 0, 0],
        [0, 0, 1.0, 0, 0],
        [0, 0, 0, 1.0, 0],
        [0, 0, 0, 0, 1.0],
    ])
    clamp = nn.compose_serial(nn.affine_net([[0, 0, 1.0, 0, 0], [0, 0, 0, 0, 0]], [0.0, float(n)]),
                              min_net())
    b = nn.stack_parallel([_carry([0, 1], 5), clamp, _carry([3, 4], 5)])
    # (block, rest, i, k, S)
    c = nn.stack_parallel([
        nn.compose_serial(nn.select_net(5, [0, 2]), reader),
        nn.compose_serial(nn.select_net(5, [1, 3, 4]), nn.carry_net(3, 2, 0.0)),
    ])
    merge = nn.affine_net([[0, 1.0, 0, 0], [0, 0, 1.0, 0], [1.0, 0, 0, 1.0]])
    return nn.compose_serial(a, split, b, c, merge)


def build_bits_width_depth(n: int, L: int) -> nn.ReluNetwork:
    """Network ``(theta, k) -> theta_1 + ... + theta_k`` for an ``L*n``-bit theta.

    Each of the ``L`` stages strips the leading ``n`` bits with a staircase,
    sums the first ``min(max(k - stage*n, 0), n)`` of them with the width-only
    reader and passes the remaining fraction on.  Depth ``4L``.
    """
    _check_int("n", n, 1, 12)
    _check_int("L", L, 1)
    if L * n > MAX_BITS:
        raise PrecisionError(f"L*n = {L * n} bits exceeds the exact range ({MAX_BITS})")
    stair = to_shallow_net(floor_gadget(2 ** n, 2.0 ** -(L * n + 1)))
    reader = build_bits_width(n)
    stages = [_peel_stage(n, s, stair, reader) for s in range(L)]
    start = nn.affine_net([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    net = nn.compose_serial(start, *stages, nn.select_net(3, [2]))
    return net.with_metadata(kind="bits_width_depth", n=int(n), L=int(L))


def _exact_fit(xs, ys, n1, n2, stage, bound, what):
    fit = wide_to_deep(fit_samples(xs, ys, n1, n2), bound, stage)
    got = nn.evaluate_scalar(fit, xs[:-1])
    if not np.array_equal(got, ys[:-1]):
        raise PrecisionError(f"{what}: float64 cannot hold the fitted values exactly")
    return fit


def build_bit_extraction_multi(N: int, L: int, table) -> nn.ReluNetwork:
    """Network ``(m, k) -> table[m, 0] + ... + table[m, k]``.

    ``table`` is a 0/1 array of shape ``(N^2 L, L n)`` with
    ``n = floor(log3(N + 2))``.  Row ``m`` is packed into the binary fraction
    ``0.table[m]``, interpolated over the integers by a narrow deep network and
    decoded by ``build_bits_width_depth`` with index ``k + 1``.
    """
    _check_int("N", N, 1)
    _check_int("L", L, 1)
    n = ilog3(N + 2)
    M = N * N * L
    table = np.asarray(table)
    if table.shape != (M, L * n):
        raise ConstructionError(f"table must have shape {(M, L * n)}, got {table.shape}")
    if not np.isin(table, (0, 1)).all():
        raise ConstructionError("table entries must be 0 or 1")
    if L * n > MAX_BITS:
        raise PrecisionError(f"L*n = {L * n} bits exceeds the exact range ({MAX_BITS})")
    packed = np.array([bin_value(row) for row in table] + [0.0])
    xs = np.arange(M + 1, dtype=np.float64)
    fit = _exact_fit(xs, packed, N, N * L - 1, 2 * N, float(M), "bit table")
    net = nn.compose_serial(
        nn.widen_with_passthrough(fit, 1, 0.0),
        nn.affine_net([[1.0, 0.0], [0.0, 1.0]], [0.0, 1.0]),
        build_bits_width_depth(n, L),
    )
    return net.with_metadata(kind="bit_extraction_multi", N=int(N), L=int(L), n=int(n))


def quantize(y, eps: float) -> np.ndarray:
    """Integer levels ``floor(y / eps)``; quotients within 1e-9 below an integer round up."""
    t = np.asarray(y, dtype=np.float64) / eps
    return np.floor(t + 1e-9).astype(np.int64)


def increment_tables(levels):
    """Split row-wise level increments into up-step and down-step indicator tables."""
    levels = np.asarray(levels, dtype=np.int64)
    inc = np.zeros_like(levels)
    inc[:, 1:] = np.diff(levels, axis=1)
    if np.abs(inc).max(initial=0) > 1:
        raise ConstructionError("consecutive values differ by more than eps")
    return (inc == 1).astype(np.int64), (inc == -1).astype(np.int64)


def _check_eps(y, eps):
    if not (eps > 0 and math.isfinite(eps)):
        raise ConstructionError("eps must be positive and finite")
    y = np.asarray(y, dtype=np.float64)
    if y.size == 0:
        raise ConstructionError("need at least one value")
    if not np.all(np.isfinite(y)) or np.any(y < 0):
        raise ConstructionError("values must be finite and non-negative")
    # a few ulps of slack so that gaps like 0.3 - 0.2 pass for eps = 0.1
    if y.shape[-1] > 1 and np.abs(np.diff(y, axis=-1)).max() > eps * (1 + 1e-12):
        raise ConstructionError("consecutive values differ by more than eps")
    return y


def _output_clamp(top: float) -> nn.ReluNetwork:
    """``z -> min(relu(z), top)`` computed as ``top - relu(top - relu(z))``.

    Rounding is monotone, so the result always lies in ``[0, top]``.
    """
    return nn.ReluNetwork((
        nn.AffineLayer([[1.0]], [0.0]),
        nn.AffineLayer([[-1.0]], [top]),
        nn.AffineLayer([[-1.0]], [top]),
    ))


def build_point_fitter_2d(N: int, L: int, values, eps: float) -> nn.ReluNetwork:
    """Network ``(m, k) -> floor(values[m, k] / eps) * eps`` clamped to ``[0, max]``.

    ``values`` has shape ``(N^2 L, L n)`` and successive entries in row-major
    order differ by at most ``eps``.  Level ``a[m, k]`` is ``a[m, 0]`` plus the
    count of up-steps minus the count of down-steps up to ``k``; the first
    term is interpolated directly, the counts come from two bit extractors.
    """
    _check_int("N", N, 1)
    _check_int("L", L, 1)
    n = ilog3(N + 2)
    M = N * N * L
    values = _check_eps(values, eps)
    if values.shape != (M, L * n):
        raise ConstructionError(f"values must have shape {(M, L * n)}, got {values.shape}")
    levels = quantize(values, eps)
    ups, downs = increment_tables(levels)
    xs = np.arange(M + 1, dtype=np.float64)
    start = np.concatenate([levels[:, 0], [0]]).astype(np.float64)
    base = nn.compose_serial(nn.select_net(2, [0]),
                             _exact_fit(xs, start, N, N * L - 1, 2 * N, float(M), "levels"))
    counts = nn.stack_parallel([
        base,
        build_bit_extraction_multi(N, L, ups),
        build_bit_extraction_multi(N, L, downs),
    ])
    net = nn.compose_serial(
        counts,
        nn.affine_net([[eps, eps, -eps]]),
        _output_clamp(float(values.max())),
    )
    return net.with_metadata(kind="point_fitter_2d", N=int(N), L=int(L), n=int(n),
                             eps=float(eps))


def build_point_fitter(N: int, L: int, values, eps: float) -> nn.ReluNetwork:
    """Network ``j -> floor(values[j] / eps) * eps`` on ``j = 0 .. J-1``.

    Needs ``J <= N^2 L^2 floor(log3(N + 2))`` and successive values at most
    ``eps`` apart.  The output always lies in ``[0, max(values)]``.  The index
    is split into a row ``m`` and an offset ``k`` by a staircase network and
    handed to ``build_point_fitter_2d`` on the values padded with their last
    entry.
    """
    _check_int("N", N, 1)
    _check_int("L", L, 1)
    values = _check_eps(values, eps)
    if values.ndim != 1:
        raise ConstructionError("values must be one-dimensional")
    n = ilog3(N + 2)
    M, row = N * N * L, L * n
    if values.size > M * row:
        raise ConstructionError(f"{values.size} values exceed capacity {M * row} "
                                f"for N={N}, L={L}")
    padded = np.concatenate([values, np.full(M * row - values.size, values[-1])])
    grid = padded.reshape(M, row)
    if row == 1:
        split = nn.affine_net([[1.0], [0.0]])
    else:
        xs = np.empty(2 * M + 1)
        xs[0:-1:2] = np.arange(M) * row
        xs[1:-1:2] = np.arange(M) * row + row - 1
        xs[-1] = M * row
        ys = np.empty(2 * M + 1)
        ys[0:-1:2] = ys[1:-1:2] = np.arange(M)
        ys[-1] = M
        rows = _exact_fit(xs, ys, N, 2 * N * L - 1, 4 * N, float(M * row), "index split")
        j = np.arange(M * row, dtype=np.float64)
        if not np.array_equal(nn.evaluate_scalar(rows, j), np.floor(j / row)):
            raise PrecisionError("index split: float64 cannot hold the split exactly")
        split = nn.compose_serial(
            nn.affine_net([[1.0], [1.0]]),
            nn.widen_with_passthrough(rows, 1, 0.0),
            nn.affine_net([[1.0, 0.0], [-float(row), 1.0]]),
        )
    net = nn.compose_serial(split, build_point_fitter_2d(N, L, grid, eps))
    return net.with_metadata(kind="point_fitter", N=int(N), L=int(L), n=int(n),
                             eps=float(eps), J=int(values.size))
