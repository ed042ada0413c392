"""Step networks that map each cell of a uniform grid on [0, 1] to its index.

For grid size K the cell of index ``k`` is ``[k/K, (k+1)/K - delta]`` (the last
cell reaches 1).  The network is a two-level lookup: a coarse staircase over
``M`` blocks, then a fine staircase over the ``K / M`` cells of a block applied
to the position inside the block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import network as nn
from .cpwl import fit_samples, wide_to_deep
from .errors import ConstructionError, PrecisionError

__all__ = [
    "iroot",
    "ilog3",
    "Partition",
    "make_partition",
    "plateau",
    "build_step_network",
    "step_width_bound",
    "step_depth_bound",
]


def iroot(value: int, d: int) -> int:
    """Largest integer ``r`` with ``r ** d <= value``."""
    if value < 0 or d < 1:
        raise ValueError("iroot needs value >= 0 and d >= 1")
    r = int(round(value ** (1.0 / d)))
    while r ** d > value:
        r -= 1
    while (r + 1) ** d <= value:
        r += 1
    return r


def ilog3(value: int) -> int:
    """Largest integer ``n`` with ``3 ** n <= value``."""
    if value < 1:
        raise ValueError("ilog3 needs a positive argument")
    n = 0
    while 3 ** (n + 1) <= value:
        n += 1
    return n


@dataclass(frozen=True)
class Partition:
    """Grid parameters derived from a width/depth budget."""

    N: int
    L: int
    d: int
    K: int
    delta: float
    blocks: int         # coarse staircase size M
    per_block: int      # fine staircase size K / M
    root_n: int         # floor(N ** (1/d))
    root_l: int         # floor(L ** (1/d))
    root_bits: int      # floor(floor(log3(N + 2)) ** (1/d))
    bits: int           # floor(log3(N + 2))

    def plateau(self, beta: int):
        return plateau(beta, self.K, self.delta)

    def representatives(self) -> np.ndarray:
        """Left end points ``k / K`` of every cell."""
        return np.arange(self.K) / self.K


def make_partition(N: int, L: int, d: int, delta: float | None = None) -> Partition:
    """Grid size ``K`` and cell gap ``delta`` for the given budget.

    ``K = floor(N^(1/d))^2 * floor(L^(1/d))^2 * floor(floor(log3(N+2))^(1/d))``.
    ``delta`` defaults to ``1 / (3K)`` and must lie in ``(0, 1/(3K)]``.
    """
    for name, val in (("N", N), ("L", L), ("d", d)):
        if not isinstance(val, (int, np.integer)) or val < 1:
            raise ConstructionError(f"{name} must be a positive integer, got {val!r}")
    a = iroot(N, d)
    b = iroot(L, d)
    bits = ilog3(N + 2)
    c = iroot(bits, d)
    blocks = a * a * b
    per_block = b * c
    K = blocks * per_block
    if delta is None:
        delta = 1.0 / (3 * K)
    delta = float(delta)
    if not 0 < delta <= 1.0 / (3 * K):
        raise ConstructionError(f"delta must lie in (0, 1/(3K)] with K={K}, got {delta}")
    if 1.0 / K - delta < 4 * np.spacing(1.0):
        raise PrecisionError(f"K={K} leaves plateaus narrower than 4 ulps")
    return Partition(int(N), int(L), int(d), K, delta, blocks, per_block, a, b, c, bits)


def plateau(beta: int, K: int, delta: float):
    """Closed interval on which the step network returns ``beta``."""
    if not 0 <= beta < K:
        raise ValueError(f"cell index {beta} outside 0..{K - 1}")
    lo = beta / K
    hi = (beta + 1) / K - (delta if beta <= K - 2 else 0.0)
    return lo, hi


def step_width_bound(N: int, d: int) -> int:
    return 8 * iroot(N, d) + 3


def step_depth_bound(L: int, d: int) -> int:
    return 2 * iroot(L, d) + 5


def _staircase(levels: int, cell: float, span_end: float, delta: float):
    """Samples of a staircase with ``levels`` plateaus of length ``cell``."""
    xs, ys = [], []
    for m in range(levels):
        xs.append(m * cell)
        ys.append(m)
        if m <= levels - 2:
            xs.append((m + 1) * cell - delta)
            ys.append(m)
    xs += [span_end, 2.0]
    ys += [levels - 1, 0]
    return np.array(xs), np.array(ys, dtype=np.float64)


def build_step_network(N: int, L: int, d: int = 1, delta: float | None = None) -> nn.ReluNetwork:
    """Scalar network sending every point of cell ``k`` to ``k``.

    Width is at most ``8 floor(N^(1/d)) + 3`` and depth at most
    ``2 floor(L^(1/d)) + 5``.
    """
    part = make_partition(N, L, d, delta)
    a, b, c = part.root_n, part.root_l, part.root_bits
    M, T, K, delta = part.blocks, part.per_block, part.K, part.delta

    xs, ys = _staircase(M, 1.0 / M, 1.0, delta)
    coarse = wide_to_deep(fit_samples(xs, ys, a, 2 * a * b - 1), 2.0, 4 * a)
    xs, ys = _staircase(T, 1.0 / K, 1.0 / M, delta)
    fine = wide_to_deep(fit_samples(xs, ys, c, 2 * b - 1), 2.0, 4 * c)

    net = nn.compose_serial(
        nn.affine_net([[1.0], [1.0]]),
        nn.widen_with_passthrough(coarse, 1, 2.0),          # (block, x)
        nn.stack_parallel([nn.carry_net(1, 1, 0.0), nn.carry_net(1, 1, 2.0)],
                          shared_input=False),               # (relu(block), x)
        nn.affine_net([[-1.0 / M, 1.0], [1.0, 0.0]]),        # (x - block/M, block)
        nn.widen_with_passthrough(fine, 1, 0.0),             # (cell in block, block)
        nn.affine_net([[1.0, float(T)]]),
    )
    return net.with_metadata(kind="step", N=int(N), L=int(L), d=int(d), K=K, delta=delta)
