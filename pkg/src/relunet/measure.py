"""Empirical error and modulus measurements."""

from __future__ import annotations

import numpy as np

from .approximator import ConstructedApproximator, in_trifling_region
from .errors import RelunetError
from .step import plateau

__all__ = [
    "SamplingError",
    "sample_outside",
    "measure_sup_error",
    "plateau_error",
    "measure_lp_error",
    "estimate_modulus",
]


class SamplingError(RelunetError):
    """Rejection sampling could not find enough points."""


def sample_outside(approx: ConstructedApproximator, n: int, rng, max_rounds: int = 50):
    """``n`` uniform points of the unit cube that avoid the grid gaps."""
    d = approx.d
    out, drawn = [], 0
    need = n
    for _ in range(max_rounds):
        x = rng.random((max(2 * need, 64), d))
        drawn += x.shape[0]
        keep = x[~in_trifling_region(x, approx.partition)]
        out.append(keep[:need])
        need -= out[-1].shape[0]
        if need <= 0:
            return np.vstack(out)
    got = n - need
    raise SamplingError(f"only {got} of {n} points accepted after {drawn} draws "
                        f"(acceptance {got / drawn:.2e})")


def _cell_corners(approx):
    K, d = approx.K, approx.d
    return np.indices((K,) * d).reshape(d, -1).T / K


def measure_sup_error(f, approx: ConstructedApproximator, n_samples: int = 10_000,
                      seed: int = 0):
    """Largest ``|f - net|`` over random points outside the gaps and all cell corners.

    Returns ``(max_error, worst_point)``.
    """
    rng = np.random.default_rng(seed)
    pts = np.vstack([sample_outside(approx, n_samples, rng), _cell_corners(approx)])
    err = np.abs(f(pts) - approx(pts))
    i = int(np.argmax(err))
    return float(err[i]), pts[i]


def plateau_error(f, approx: ConstructedApproximator, per_cell: int = 9, seed: int = 0) -> float:
    """Largest ``|net(x) - f(corner)|`` over points of every cell.

    Each cell contributes its two extreme corners plus ``per_cell`` random
    interior points.
    """
    K, d, delta = approx.K, approx.d, approx.delta
    rng = np.random.default_rng(seed)
    beta = np.indices((K,) * d).reshape(d, -1).T
    lo = beta / K
    hi = np.empty_like(lo)
    for k in range(K):
        hi[beta == k] = plateau(k, K, delta)[1]
    target = f(lo)
    worst = 0.0
    fracs = [np.zeros((1, d)), np.ones((1, d)), rng.random((per_cell, d))]
    for frac in np.vstack(fracs):
        pts = lo + (hi - lo) * frac
        worst = max(worst, float(np.abs(approx(pts) - target).max()))
    return worst


def measure_lp_error(f, approx: ConstructedApproximator, p: float = 1.0,
                     n_samples: int = 100_000, seed: int = 0, method: str = "mc"):
    """L^p error over the unit cube.

    ``method="mc"`` uses uniform Monte Carlo and returns the estimate with
    a one-standard-error radius (delta method on the mean of ``|e|^p``).
    ``method="grid"`` (d = 1 only) uses the midpoint rule with radius 0.
    """
    if method == "grid":
        if approx.d != 1:
            raise ValueError("grid quadrature is only available for d = 1")
        x = ((np.arange(n_samples) + 0.5) / n_samples)[:, None]
        e = np.abs(f(x) - approx(x)) ** p
        return float(e.mean() ** (1 / p)), 0.0
    if method != "mc":
        raise ValueError(f"unknown method {method!r}")
    rng = np.random.default_rng(seed)
    x = rng.random((n_samples, approx.d))
    e = np.abs(f(x) - approx(x)) ** p
    m = float(e.mean())
    se = float(e.std(ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else 0.0
    est = m ** (1 / p)
    radius = (m ** (1 / p - 1) / p) * se if m > 0 else 0.0
    return est, radius


def estimate_modulus(f, d: int, radii, pairs: int = 1000, seed: int = 0) -> np.ndarray:
    """Empirical modulus of continuity at each radius.

    Pairs are drawn at distance at most ``r`` (uniform direction, length
    ``r * U^(1/2)``, clipped to the cube).  Values are cumulative maxima over
    the pairs of all smaller radii, so the result is non-decreasing.
    """
    rng = np.random.default_rng(seed)
    radii = np.asarray(radii, dtype=np.float64)
    order = np.argsort(radii)
    out = np.empty_like(radii)
    best = 0.0
    for i in order:
        r = radii[i]
        x = rng.random((pairs, d))
        u = rng.normal(size=(pairs, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        y = np.clip(x + u * (r * np.sqrt(rng.random((pairs, 1)))), 0.0, 1.0)
        best = max(best, float(np.abs(f(x) - f(y)).max()))
        out[i] = best
    return out
