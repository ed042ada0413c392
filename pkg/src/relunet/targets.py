"""Catalog of test functions on [0, 1]^d with declared moduli of continuity."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .approximator import HolderModulus

__all__ = ["TargetFunction", "TARGET_NAMES", "get_target", "catalog", "bump_function"]


@dataclass(frozen=True, eq=False)
class TargetFunction:
    name: str
    d: int
    func: Callable = field(repr=False)
    modulus: HolderModulus
    description: str = ""

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.d:
            raise ValueError(f"{self.name} expects points of dimension {self.d}")
        return self.func(x)


def bump_function(d: int, cells: int = 3, alpha: float = 1.0, seed: int = 0,
                  signs=None) -> Callable:
    """Signed sum of pyramids, one per cube of a ``cells^d`` grid.

    Each pyramid peaks at ``(h^alpha)/2`` in its cube center (``h`` is half the
    side), vanishes on the cube boundary and is linear along rays from the
    center.  Signs are drawn from ``seed`` unless given.
    """
    eta = 1.0 / cells
    half = eta / 2
    if signs is None:
        signs = np.random.default_rng(seed).choice([-1.0, 1.0], size=(cells,) * d)
    signs = np.asarray(signs, dtype=np.float64).reshape((cells,) * d)
    peak = half ** alpha / 2

    def f(x):
        idx = np.clip(np.floor(x * cells).astype(np.int64), 0, cells - 1)
        center = (idx + 0.5) * eta
        dist = np.abs(x - center).max(axis=1)
        s = signs[tuple(idx.T)]
        return s * peak * np.clip(1.0 - dist / half, 0.0, None)

    return f


def _make(name: str, d: int, seed: int) -> TargetFunction:
    root = math.sqrt(d)
    if name == "constant":
        return TargetFunction(name, d, lambda x: np.full(x.shape[0], 0.75),
                              HolderModulus(0.0, 1.0, d), "f = 0.75")
    if name == "affine":
        a = np.array([(-1.0) ** i * 0.6 / (i + 1) for i in range(d)])
        return TargetFunction(name, d, lambda x: x @ a + 0.2,
                              HolderModulus(float(np.linalg.norm(a)), 1.0, d),
                              "a . x + 0.2, Lipschitz |a|")
    if name == "dist_inv_pi":
        c = np.full(d, 1 / math.pi)
        return TargetFunction(name, d, lambda x: np.linalg.norm(x - c, axis=1),
                              HolderModulus(1.0, 1.0, d),
                              "Euclidean distance to (1/pi, ..., 1/pi); |x - 1/pi| for d = 1")
    if name == "holder_sum":
        alpha = 0.5
        return TargetFunction(name, d, lambda x: (np.abs(x - 0.5) ** alpha).sum(axis=1),
                              HolderModulus(d ** (1 - alpha / 2), alpha, d),
                              "sum |x_i - 1/2|^(1/2), Holder order 1/2")
    if name == "oscillatory":
        return TargetFunction(name, d, lambda x: np.sin(2 * math.pi * x.sum(axis=1)),
                              HolderModulus(2 * math.pi * root, 1.0, d),
                              "sin(2 pi (x_1 + ... + x_d))")
    if name == "bump":
        return TargetFunction(name, d, bump_function(d, 3, 1.0, seed),
                              HolderModulus(0.5, 1.0, d),
                              "random-sign pyramids on a 3^d grid, Lipschitz 1/2")
    raise KeyError(f"unknown target {name!r}; choose from {', '.join(TARGET_NAMES)}")


TARGET_NAMES = ("constant", "affine", "dist_inv_pi", "holder_sum", "oscillatory", "bump")


def get_target(name: str, d: int = 1, seed: int = 0) -> TargetFunction:
    if d < 1:
        raise ValueError("dimension must be positive")
    return _make(name, d, seed)


def catalog(d: int = 1, seed: int = 0) -> list:
    return [_make(name, d, seed) for name in TARGET_NAMES]
