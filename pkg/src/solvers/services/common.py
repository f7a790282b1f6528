# path: src/solvers/services/common.py
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from src.core.exceptions import SolverAbort
from src.core.meter import GradMeter
from src.core.problem import IFiniteSumProblem
from src.core.services import oracle


@dataclass
class StepState:
    """What a solver exposes to a step callback, before the step is applied."""

    epoch: int
    k: int
    x: np.ndarray
    direction: np.ndarray
    extras: dict[str, Any] = field(default_factory=dict)


StepCallback = Callable[[StepState], None]


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based stream: equal seeds give equal sampling sequences on any platform."""
    return np.random.Generator(np.random.Philox(int(seed)))


def start_point(problem: IFiniteSumProblem, x0: Optional[np.ndarray]) -> np.ndarray:
    if x0 is None:
        return np.zeros(problem.d)
    return oracle.project(problem, oracle.as_vector(problem, x0).copy())


def ensure_finite(x: np.ndarray, meter: GradMeter, **diagnostics: Any) -> None:
    if not oracle.check_finite(x):
        raise SolverAbort(
            "non-finite iterate",
            passes=meter.passes(),
            bad_coords=int(np.count_nonzero(~np.isfinite(x))),
            **diagnostics,
        )
