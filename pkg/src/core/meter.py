# path: src/core/meter.py
from __future__ import annotations

from dataclasses import dataclass

from src.core.exceptions import InputError


@dataclass
class GradMeter:
    """
    Counts (component gradient, lingering radius) oracle evaluations.

    A paired gradient+radius evaluation at the same point is one unit.
    passes() is the count normalised by n and never decreases.
    """

    n: int
    oracle_calls: int = 0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InputError(f"meter needs n >= 1, got {self.n}")

    def bill(self, units: int = 1) -> None:
        if units < 0:
            raise InputError(f"cannot bill negative units: {units}")
        self.oracle_calls += int(units)

    def passes(self) -> float:
        return self.oracle_calls / self.n

    def merge(self, other: "GradMeter") -> None:
        """Folds a worker meter (same n) into this one."""
        if other.n != self.n:
            raise InputError(f"meter n mismatch: {self.n} vs {other.n}")
        self.oracle_calls += other.oracle_calls
