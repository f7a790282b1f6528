# path: src/core/services/oracle.py
"""
Metered access to a finite-sum problem.

Solvers go through these functions so that every (gradient, radius) evaluation is billed
on the GradMeter. Objective values are for reporting and are never billed.
"""

from __future__ import annotations

import numpy as np

from src.core.exceptions import InputError
from src.core.meter import GradMeter
from src.core.problem import IFiniteSumProblem


def as_vector(p: IFiniteSumProblem, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != p.d:
        raise InputError(f"expected a vector of length {p.d}, got shape {x.shape}")
    return x


def check_index(p: IFiniteSumProblem, i: int) -> int:
    if not 0 <= int(i) < p.n:
        raise InputError(f"component index {i} out of range [0, {p.n})")
    return int(i)


def check_indices(p: IFiniteSumProblem, idx: np.ndarray) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= p.n):
        raise InputError(f"component indices out of range [0, {p.n})")
    return idx


def full_objective(p: IFiniteSumProblem, x: np.ndarray) -> float:
    x = as_vector(p, x)
    return float(np.mean(p.component_values(x)))


def component_gradient(p: IFiniteSumProblem, i: int, x: np.ndarray, meter: GradMeter) -> np.ndarray:
    i = check_index(p, i)
    x = as_vector(p, x)
    g = p.data_gradients(np.array([i]), x)[0] + p.shared_gradient(x)
    meter.bill(1)
    return g


def lingering_radius(p: IFiniteSumProblem, i: int, x: np.ndarray, meter: GradMeter) -> float:
    i = check_index(p, i)
    x = as_vector(p, x)
    r = float(p.radii(np.array([i]), x)[0])
    meter.bill(1)
    return r


def gradient_and_radius(
    p: IFiniteSumProblem, i: int, x: np.ndarray, meter: GradMeter
) -> tuple[np.ndarray, float]:
    """Paired evaluation at the same (i, x): one unit for both."""
    i = check_index(p, i)
    x = as_vector(p, x)
    g, r = p.data_gradients_and_radii(np.array([i]), x)
    meter.bill(1)
    return g[0] + p.shared_gradient(x), float(r[0])


def data_gradients(p: IFiniteSumProblem, idx: np.ndarray, x: np.ndarray, meter: GradMeter) -> np.ndarray:
    idx = check_indices(p, idx)
    out = p.data_gradients(idx, x)
    meter.bill(idx.size)
    return out


def data_gradients_and_radii(
    p: IFiniteSumProblem, idx: np.ndarray, x: np.ndarray, meter: GradMeter
) -> tuple[np.ndarray, np.ndarray]:
    idx = check_indices(p, idx)
    g, r = p.data_gradients_and_radii(idx, x)
    meter.bill(idx.size)
    return g, r


def all_radii(p: IFiniteSumProblem, x: np.ndarray, meter: GradMeter) -> np.ndarray:
    x = as_vector(p, x)
    r = p.radii(np.arange(p.n), x)
    meter.bill(p.n)
    return r


def full_gradient(p: IFiniteSumProblem, x: np.ndarray, meter: GradMeter) -> np.ndarray:
    x = as_vector(p, x)
    g = p.data_gradients(np.arange(p.n), x).mean(axis=0) + p.shared_gradient(x)
    meter.bill(p.n)
    return g


def project(p: IFiniteSumProblem, x: np.ndarray) -> np.ndarray:
    return p.project(np.asarray(x, dtype=np.float64))


def check_finite(x: np.ndarray) -> bool:
    return bool(np.all(np.isfinite(x)))
