# path: src/core/problem.py
from __future__ import annotations

from enum import Enum
from typing import Protocol, runtime_checkable

import numpy as np

from src.core.exceptions import InputError


class NormKind(str, Enum):
    """Norm used for lingering-radius distance tests."""

    EUCLIDEAN = "euclidean"
    INFINITY = "infinity"


class Domain(str, Enum):
    UNCONSTRAINED = "unconstrained"
    NONNEGATIVE = "nonnegative-orthant"


@runtime_checkable
class IFiniteSumProblem(Protocol):
    """
    Contract of a finite-sum objective f(x) = (1/n) sum_i f_i(x).

    Every component gradient splits into two parts:
    - data part: depends on the component's data, this is what lingers;
    - shared part: identical for every i (regularizer, capacity vector) and cheap to
      recompute analytically at each step.

    Radii certify the data part only.
    """

    n: int
    d: int
    norm_kind: NormKind
    domain: Domain
    smoothness: float | None

    def component_values(self, x: np.ndarray) -> np.ndarray: ...

    def data_gradients(self, idx: np.ndarray, x: np.ndarray) -> np.ndarray: ...

    def radii(self, idx: np.ndarray, x: np.ndarray) -> np.ndarray: ...

    def data_gradients_and_radii(self, idx: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...

    def shared_gradient(self, x: np.ndarray) -> np.ndarray: ...


class FiniteSumProblem:
    """
    Base implementation. Subclasses provide component_values, data_gradients, radii
    and usually override data_gradients_and_radii to share the margin computation.

    Instances are immutable after construction and can be shared between threads.
    """

    n: int
    d: int
    norm_kind: NormKind = NormKind.EUCLIDEAN
    domain: Domain = Domain.UNCONSTRAINED
    smoothness: float | None = None

    def component_values(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def data_gradients(self, idx: np.ndarray, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def radii(self, idx: np.ndarray, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def data_gradients_and_radii(self, idx: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.data_gradients(idx, x), self.radii(idx, x)

    def shared_gradient(self, x: np.ndarray) -> np.ndarray:
        return np.zeros(self.d)

    # ---- derived helpers (no metering here, see core.services.oracle) ----

    def all_indices(self) -> np.ndarray:
        return np.arange(self.n, dtype=np.int64)

    def objective(self, x: np.ndarray) -> float:
        return float(np.mean(self.component_values(x)))

    def mean_data_gradient(self, x: np.ndarray) -> np.ndarray:
        return self.data_gradients(self.all_indices(), x).mean(axis=0)

    def full_gradient(self, x: np.ndarray) -> np.ndarray:
        return self.mean_data_gradient(x) + self.shared_gradient(x)

    def project(self, x: np.ndarray) -> np.ndarray:
        if self.domain is Domain.NONNEGATIVE:
            return np.maximum(x, 0.0)
        return x

    def distance(self, x: np.ndarray, y: np.ndarray) -> float:
        diff = np.asarray(x) - np.asarray(y)
        if self.norm_kind is NormKind.INFINITY:
            return float(np.max(np.abs(diff))) if diff.size else 0.0
        return float(np.linalg.norm(diff))

    def _check_dims(self) -> None:
        if self.n < 1 or self.d < 1:
            raise InputError(f"problem needs n >= 1 and d >= 1, got n={self.n}, d={self.d}")
