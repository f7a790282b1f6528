# path: src/problems/profiling.py
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src.core.meter import GradMeter
from src.core.problem import IFiniteSumProblem
from src.core.services import oracle


def profile_B(
    problem: IFiniteSumProblem,
    x: np.ndarray,
    radii_grid: Sequence[float],
    meter: GradMeter,
) -> list[tuple[float, float]]:
    """(r, |B(x, r)| / n) with B(x, r) = {i : delta(x, i) < r}. Bills one pass."""
    radii = np.sort(oracle.all_radii(problem, x, meter))
    grid = np.asarray(radii_grid, dtype=np.float64)
    counts = np.searchsorted(radii, grid, side="left")
    return [(float(r), float(c) / problem.n) for r, c in zip(grid, counts)]


@dataclass(frozen=True)
class AffineFit:
    slope: float  # c1
    offset: float  # c2, least squares
    envelope_offset: float  # smallest c2 with c1 r + c2 >= every point
    r2: float


def linear_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares line y ~ a x + b; returns (a, b, R^2), all NaN without two distinct x."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 2 or np.ptp(x) == 0:
        return math.nan, math.nan, math.nan
    a, b = np.polyfit(x, y, 1)
    resid = y - (a * x + b)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(a), float(b), r2


def fit_affine_envelope(curve: Sequence[tuple[float, float]], *, saturation: float = 1.0) -> AffineFit:
    """Fits c1 r + c2 to the unsaturated, finite part of a profile curve."""
    pts = np.asarray([(r, f) for r, f in curve if np.isfinite(r) and f < saturation], dtype=np.float64)
    if pts.shape[0] < 2:
        pts = np.asarray([(r, f) for r, f in curve if np.isfinite(r)], dtype=np.float64)
    if pts.shape[0] < 2:
        return AffineFit(slope=math.nan, offset=math.nan, envelope_offset=math.nan, r2=math.nan)
    r, f = pts[:, 0], pts[:, 1]
    c1, c2, r2 = linear_fit(r, f)
    if math.isnan(c1):
        return AffineFit(slope=c1, offset=c2, envelope_offset=math.nan, r2=r2)
    envelope = float(np.max(f - c1 * r))
    return AffineFit(slope=c1, offset=c2, envelope_offset=envelope, r2=r2)


def rate_shape_fits(passes: np.ndarray, errors: np.ndarray) -> dict[str, float]:
    """
    R^2 of log-error against T^(1/3) and against log T.
    A straighter first fit means exp(-T^(1/3))-type decay, a straighter second one 1/T-type.
    """
    passes = np.asarray(passes, dtype=np.float64)
    errors = np.asarray(errors, dtype=np.float64)
    keep = (passes > 0) & (errors > 0) & np.isfinite(errors)
    t, e = passes[keep], np.log(errors[keep])
    _, _, r2_cuberoot = linear_fit(np.cbrt(t), e)
    _, _, r2_log = linear_fit(np.log(t), e)
    return {"r2_cuberoot": r2_cuberoot, "r2_log": r2_log, "points": int(t.size)}
