"""Verification runs: build, measure, compare with the guaranteed bounds, report CSV."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .approximator import (ConstructedApproximator, build_approximator, depth_budget,
                           error_bound, lp_delta, width_budget)
from .errors import RelunetError
from .measure import measure_lp_error, measure_sup_error, plateau_error
from .step import iroot, make_partition
from .targets import get_target

__all__ = ["CSV_COLUMNS", "SuiteRow", "RowReport", "SuiteResult", "run_row",
           "run_verification_suite", "write_csv", "guaranteed_width"]

CSV_COLUMNS = ("target", "d", "N", "L", "K", "delta", "epsilon", "width", "depth", "params",
               "sup_err_outside", "l1_err", "l2_err", "bound_maingap", "bound_main", "ratio",
               "seed", "wall_ms")

PLATEAU_TOL = 1e-8


def guaranteed_width(N: int, d: int) -> int:
    return 16 * max(d * iroot(N, d), N + 2)


@dataclass
class SuiteRow:
    """One configuration to verify.

    ``delta_policy`` is ``"default"`` (``1/(3K)``) or ``"lp"``; the latter
    shrinks the gaps so the L^1 bound applies and enables the L^1 check.
    ``bound_scale`` multiplies every bound before comparison (values below 1
    make the checks stricter).  ``tamper`` may replace the built approximator,
    which is how negative controls are injected.
    """

    target: str
    N: int
    L: int
    d: int = 1
    seed: int = 0
    delta_policy: str = "default"
    sup_samples: int = 10_000
    lp_samples: int = 20_000
    bound_scale: float = 1.0
    tamper: Optional[Callable] = None


@dataclass
class RowReport:
    values: dict
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


@dataclass
class SuiteResult:
    reports: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)


def run_row(row: SuiteRow) -> RowReport:
    t0 = time.perf_counter()
    target = get_target(row.target, row.d, row.seed)
    omega = target.modulus
    if row.delta_policy == "lp":
        K = make_partition(row.N, row.L, row.d).K
        f0 = float(target(np.zeros((1, row.d)))[0])
        delta = lp_delta(f0, omega, row.N, row.L, row.d, 1.0, K)
    elif row.delta_policy == "default":
        delta = None
    else:
        raise ValueError(f"unknown delta policy {row.delta_policy!r}")
    approx: ConstructedApproximator = build_approximator(target, row.N, row.L, row.d, delta)
    if row.tamper is not None:
        approx = row.tamper(approx)
    net = approx.network

    sup, _ = measure_sup_error(target, approx, row.sup_samples, row.seed)
    l1, l1_se = measure_lp_error(target, approx, 1.0, row.lp_samples, row.seed + 1)
    l2, _ = measure_lp_error(target, approx, 2.0, row.lp_samples, row.seed + 2)
    gap_bound = error_bound(omega, row.N, row.L, row.d, "maingap")
    main_bound = error_bound(omega, row.N, row.L, row.d, "main")
    plateau = plateau_error(target, approx, 9, row.seed)
    ratio = sup / gap_bound if gap_bound > 0 else (0.0 if sup == 0 else math.inf)

    s = row.bound_scale
    failures = []
    if sup > s * gap_bound + PLATEAU_TOL:
        failures.append(f"sup error {sup:.3e} exceeds bound {s * gap_bound:.3e}")
    if plateau > s * 2 * approx.epsilon + PLATEAU_TOL:
        failures.append(f"cell error {plateau:.3e} exceeds 2*eps = {2 * approx.epsilon:.3e}")
    if net.width > min(width_budget(row.N, row.d), guaranteed_width(row.N, row.d)):
        failures.append(f"width {net.width} over budget")
    if net.depth > depth_budget(row.L):
        failures.append(f"depth {net.depth} over budget {depth_budget(row.L)}")
    if row.delta_policy == "lp" and l1 > s * main_bound + 3 * l1_se:
        failures.append(f"L1 error {l1:.3e} exceeds bound {s * main_bound:.3e}")

    values = {
        "target": row.target, "d": row.d, "N": row.N, "L": row.L, "K": approx.K,
        "delta": approx.delta, "epsilon": approx.epsilon, "width": net.width,
        "depth": net.depth, "params": net.param_count, "sup_err_outside": sup,
        "l1_err": l1, "l2_err": l2, "bound_maingap": gap_bound, "bound_main": main_bound,
        "ratio": ratio, "seed": row.seed,
        "wall_ms": round((time.perf_counter() - t0) * 1000, 1),
    }
    return RowReport(values, failures)


def run_verification_suite(rows) -> SuiteResult:
    """Run every row in order; a row whose build fails is reported, not raised."""
    reports = []
    for row in rows:
        try:
            reports.append(run_row(row))
        except (RelunetError, ValueError, KeyError) as exc:
            values = {"target": row.target, "d": row.d, "N": row.N, "L": row.L,
                      "seed": row.seed}
            reports.append(RowReport(values, [f"build failed: {exc}"]))
    return SuiteResult(reports)


def write_csv(reports, stream=None) -> str:
    """Write reports as CSV (header plus one line per row); returns the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rep in reports:
        w.writerow([_fmt(rep.values.get(c, "")) for c in CSV_COLUMNS])
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v
