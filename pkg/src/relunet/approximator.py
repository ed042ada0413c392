"""Assembly of the full approximating network for a continuous function on [0, 1]^d.

Pipeline: each coordinate goes through a step network that returns its grid
cell index, the index vector is flattened to one integer ``j`` and a point
fitter returns the quantized function value stored for ``j``.  The flattening
interleaves each row of ``K`` cells with ``K`` extra slots that interpolate
linearly to the start of the next row, which keeps successive stored values at
most ``eps`` apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import network as nn
from .bits import MAX_BITS, build_point_fitter
from .errors import ConstructionError
from .step import Partition, build_step_network, ilog3, iroot, make_partition

__all__ = [
    "HolderModulus",
    "ConstructedApproximator",
    "MAX_CELLS",
    "bridge_values",
    "build_approximator",
    "rescale_to_box",
    "error_bound",
    "box_error_bound",
    "lp_delta",
    "in_trifling_region",
    "trifling_measure_bound",
    "width_budget",
    "depth_budget",
]

MAX_CELLS = 10 ** 5
EPS_FLOOR = 2.0 ** -60


@dataclass(frozen=True)
class HolderModulus:
    """Modulus ``r -> lam * min(r, diameter)^alpha``; diameter defaults to sqrt(d)."""

    lam: float
    alpha: float = 1.0
    d: int = 1
    diameter: float | None = None

    def __post_init__(self):
        if self.lam < 0 or not 0 < self.alpha <= 1:
            raise ValueError("need lam >= 0 and alpha in (0, 1]")

    @property
    def diam(self) -> float:
        return math.sqrt(self.d) if self.diameter is None else self.diameter

    def __call__(self, r):
        r = np.minimum(np.asarray(r, dtype=np.float64), self.diam)
        out = self.lam * np.power(np.maximum(r, 0.0), self.alpha)
        return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class ConstructedApproximator:
    network: nn.ReluNetwork
    partition: Partition
    epsilon: float
    shift: float
    levels: int                 # depth parameter handed to the point fitter
    stored: np.ndarray = field(repr=False)   # interpolated grid values, shifted

    @property
    def N(self):
        return self.partition.N

    @property
    def L(self):
        return self.partition.L

    @property
    def d(self):
        return self.partition.d

    @property
    def K(self):
        return self.partition.K

    @property
    def delta(self):
        return self.partition.delta

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1 and self.d == 1:
            return nn.evaluate(self.network, x[:, None])[:, 0]
        out = nn.evaluate(self.network, np.atleast_2d(x))[:, 0]
        return out if x.ndim > 1 else out[0]


def width_budget(N: int, d: int) -> int:
    return max(8 * d * iroot(N, d) + 3 * d, 16 * N + 30)


def depth_budget(L: int) -> int:
    return 11 * L + 18


def _grid(K: int, d: int) -> np.ndarray:
    """Cell indices in lexicographic order, first coordinate most significant."""
    return np.indices((K,) * d).reshape(d, -1).T


def bridge_values(cell_values: np.ndarray, corner_value: float, K: int, d: int) -> np.ndarray:
    """Values stored at ``j = 0 .. 2 K^d`` by the flattened lookup.

    ``cell_values`` holds the function at the ``K^d`` cell corners in
    lexicographic order.  Row ``p`` (all coordinates but the last fixed)
    occupies slots ``2Kp .. 2Kp + K - 1``; the following ``K`` slots ramp
    linearly to the first value of row ``p + 1`` (or ``corner_value`` after
    the last row).
    """
    rows = np.asarray(cell_values, dtype=np.float64).reshape(-1, K)
    nxt = np.concatenate([rows[1:, 0], [corner_value]])
    t = np.arange(1, K + 1) / (K + 1)
    ramp = rows[:, -1:] + (nxt - rows[:, -1])[:, None] * t
    out = np.concatenate([rows, ramp], axis=1).ravel()
    return np.concatenate([out, [corner_value]])


def build_approximator(f: Callable, N: int, L: int, d: int = 1, delta: float | None = None,
                       shift_policy: str = "empirical", modulus: Callable | None = None,
                       max_cells: int = MAX_CELLS) -> ConstructedApproximator:
    """Network approximating ``f`` uniformly outside a small set of grid gaps.

    Args:
        f: vectorized function taking an ``(n, d)`` array and returning ``(n,)``.
        N, L: width and depth parameters.
        d: input dimension.
        delta: gap width, default ``1 / (3K)``.
        shift_policy: ``"empirical"`` subtracts the smallest sampled value;
            ``"modulus"`` subtracts ``f(0) - modulus(sqrt(d))``.
        modulus: modulus of continuity, needed for the ``"modulus"`` policy.
        max_cells: refuse grids with more than this many cells.

    Returns:
        The network and the quantities used to build it.  Width is at most
        ``max(8 d floor(N^(1/d)) + 3d, 16N + 30)``, depth at most ``11L + 18``.
    """
    part = make_partition(N, L, d, delta)
    K = part.K
    if K ** d > max_cells:
        raise ConstructionError(f"grid of {K}^{d} cells exceeds the cap of {max_cells}")
    levels = math.ceil(math.sqrt(2) * L)
    n = ilog3(N + 2)
    if levels * n > MAX_BITS:
        raise ConstructionError(f"{levels * n} bits per row exceeds the exact range")
    if 2 * K ** d > N * N * levels * levels * n:
        raise ConstructionError("grid too large for the point fitter capacity")

    cells = _grid(K, d) / K
    pts = np.vstack([cells, np.ones((1, d))])
    vals = np.asarray(f(pts), dtype=np.float64).reshape(-1)
    if vals.shape != (pts.shape[0],) or not np.all(np.isfinite(vals)):
        raise ConstructionError("target must return one finite value per point")
    if shift_policy == "empirical":
        shift = float(vals.min())
    elif shift_policy == "modulus":
        if modulus is None:
            raise ConstructionError("the modulus shift policy needs a modulus")
        shift = float(f(np.zeros((1, d)))[0] - modulus(math.sqrt(d)))
        if np.any(vals - shift < 0):
            raise ConstructionError("declared modulus is too small for the sampled values")
    else:
        raise ConstructionError(f"unknown shift policy {shift_policy!r}")
    shifted = vals - shift
    stored = bridge_values(shifted[:-1], shifted[-1], K, d)
    eps = max(float(np.abs(np.diff(stored)).max(initial=0.0)), EPS_FLOOR)

    fitter = build_point_fitter(N, levels, stored[:-1], eps)
    step = build_step_network(N, L, d, part.delta)
    encoder = nn.stack_parallel([step] * d, shared_input=False)
    index = [2.0 * K ** (d - i) for i in range(1, d)] + [1.0]
    net = nn.compose_serial(
        encoder,
        nn.affine_net([index]),
        fitter,
        nn.affine_net([[1.0]], [shift]),
    )
    net = net.with_metadata(kind="approximator", N=int(N), L=int(L), d=int(d), K=int(K),
                            delta=part.delta, epsilon=eps, shift=shift)
    return ConstructedApproximator(net, part, eps, shift, levels, stored)


def rescale_to_box(f: Callable, R: float, N: int, L: int, d: int = 1, **kwargs):
    """Approximator for ``f`` on ``[-R, R]^d`` via the affine map onto the unit cube.

    Extra keyword arguments go to ``build_approximator``; a ``modulus`` given
    for ``f`` is rescaled accordingly.
    """
    if not R > 0:
        raise ConstructionError("R must be positive")
    R = float(R)
    inner = lambda t: f(2 * R * np.asarray(t) - R)  # noqa: E731
    if kwargs.get("modulus") is not None:
        mod = kwargs["modulus"]
        kwargs["modulus"] = lambda r: mod(2 * R * np.asarray(r))
    approx = build_approximator(inner, N, L, d, **kwargs)
    pre = nn.affine_net(np.eye(d) / (2 * R), np.full(d, 0.5))
    net = nn.compose_serial(pre, approx.network).with_metadata(box_radius=R)
    return ConstructedApproximator(net, approx.partition, approx.epsilon, approx.shift,
                                   approx.levels, approx.stored)


def _rate(N, L, d):
    return (N * N * L * L * math.log(N + 2, 3)) ** (-1.0 / d)


def error_bound(omega: Callable, N: int, L: int, d: int = 1, variant: str = "main") -> float:
    """Guaranteed error for width/depth budget ``(N, L)``.

    Variants: ``"main"`` (L^p and uniform), ``"maingap"`` (uniform outside
    the grid gaps), ``"holder"`` (closed form, ``omega`` must be a
    ``HolderModulus``) and ``"tilde"`` where ``N`` and ``L`` are the actual
    width and depth of the network.
    """
    if variant == "main":
        return 131 * math.sqrt(d) * float(omega(_rate(N, L, d)))
    if variant == "maingap":
        return 130 * math.sqrt(d) * float(omega(_rate(N, L, d)))
    if variant == "holder":
        if not isinstance(omega, HolderModulus):
            raise ValueError("the holder variant needs a HolderModulus")
        base = N * N * L * L * math.log(N + 2, 3)
        return 131 * omega.lam * math.sqrt(d) * base ** (-omega.alpha / d)
    if variant == "tilde":
        if N < 3 ** (d + 4) * d or L < 29 + 2 * d:
            raise ValueError("tilde variant needs N >= 3^(d+4) d and L >= 29 + 2d")
        n_eff = N / (3 ** (d + 5) * d)
        l_eff = (L - 18 - 2 * d) / 22
        arg = (n_eff ** 2 * l_eff ** 2 * math.log(n_eff + 2, 3)) ** (-1.0 / d)
        return 131 * math.sqrt(d) * float(omega(arg))
    raise ValueError(f"unknown bound variant {variant!r}")


def box_error_bound(omega: Callable, N: int, L: int, d: int, R: float, p: float) -> float:
    """L^p bound on ``[-R, R]^d``; ``omega`` is the modulus of f on the box."""
    return 131 * (2 * R) ** (d / p) * math.sqrt(d) * float(omega(2 * R * _rate(N, L, d)))


def lp_delta(f_at_zero: float, omega: Callable, N: int, L: int, d: int, p: float,
             K: int | None = None) -> float:
    """Gap width small enough that the gap region adds at most ``omega(rate)^p``.

    Chooses ``delta <= 1/(3K)`` with
    ``K d delta (2|f(0)| + 2 omega(sqrt d))^p <= omega(rate)^p``.
    """
    if K is None:
        K = make_partition(N, L, d).K
    top = float(omega(_rate(N, L, d))) ** p
    spread = (2 * abs(f_at_zero) + 2 * float(omega(math.sqrt(d)))) ** p
    delta = 1.0 / (3 * K)
    if top > 0 and spread > 0:
        delta = min(delta, top / (K * d * spread))
    return delta


def in_trifling_region(x, part: Partition) -> np.ndarray:
    """True where some coordinate sits inside a gap ``(k/K - delta, k/K)``."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    K, delta = part.K, part.delta
    k = np.ceil(x * K)
    gap = k / K - x
    hit = (k >= 1) & (k <= K - 1) & (gap > 0) & (gap < delta)
    return hit.any(axis=1)


def trifling_measure_bound(part: Partition) -> float:
    return part.K * part.d * part.delta

