# path: src/core/services/recorder.py
from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from src.core.config import settings
from src.core.meter import GradMeter
from src.core.problem import IFiniteSumProblem
from src.core.schemas.run_record import CSV_HEADER, RunRecord, TracePoint
from src.core.services.oracle import full_objective

PrimalFn = Callable[[np.ndarray], float]


@dataclass
class Recorder:
    """
    Collects checkpoints of a single run.

    Checkpoints fire every `every_units` billed oracle units (n/4 by default), when a
    solver forces one (epoch ends), and once more at the end of the run. Objectives are
    stored raw together with the iterate, evaluated on `scoring` when set (the unsmoothed
    SVM objective for a smoothed run); errors are computed in finalize() once the reference
    values are known.
    """

    problem: IFiniteSumProblem
    meter: GradMeter
    budget: float = float("inf")
    every_units: Optional[int] = None
    wall_clock: bool = True
    points: list[TracePoint] = field(default_factory=list)
    iterates: list[np.ndarray] = field(default_factory=list)
    scoring: Optional[IFiniteSumProblem] = None

    def __post_init__(self) -> None:
        if self.every_units is None:
            self.every_units = max(1, int(round(self.problem.n * settings.solver.checkpoint_fraction)))
        self._t0 = time.monotonic()
        self._next_units = 0

    @property
    def budget_units(self) -> float:
        return self.budget * self.meter.n

    def exhausted(self) -> bool:
        return self.meter.oracle_calls >= self.budget_units

    def can_afford(self, units: int) -> bool:
        return self.meter.oracle_calls + units <= self.budget_units + 1e-9

    def due(self) -> bool:
        return self.meter.oracle_calls >= self._next_units

    def maybe_record(self, x: np.ndarray, live_count: Optional[int] = None) -> None:
        if self.due():
            self.record(x, live_count)

    def record(self, x: np.ndarray, live_count: Optional[int] = None) -> None:
        passes = self.meter.passes()
        if self.points and self.points[-1].pass_count == passes:
            # same billing position: keep the newest state
            self.points.pop()
            self.iterates.pop()
        wall_ms = (time.monotonic() - self._t0) * 1000.0 if self.wall_clock else 0.0
        self.points.append(
            TracePoint(
                pass_count=passes,
                wall_ms=wall_ms,
                objective=full_objective(self.scoring or self.problem, x),
                live_count=live_count,
            )
        )
        self.iterates.append(np.array(x, copy=True))
        while self._next_units <= self.meter.oracle_calls:
            self._next_units += self.every_units

    @property
    def last_x(self) -> Optional[np.ndarray]:
        return self.iterates[-1] if self.iterates else None

    def min_objective(self) -> float:
        return min((p.objective for p in self.points), default=float("inf"))

    def final_objective(self) -> float:
        return self.points[-1].objective if self.points else float("inf")

    def finalize(self, f_star: float, primal_fn: Optional[PrimalFn] = None) -> list[RunRecord]:
        return [
            RunRecord(
                pass_count=p.pass_count,
                wall_ms=p.wall_ms,
                objective_error=max(p.objective - f_star, 0.0),
                primal_error=primal_fn(x) if primal_fn is not None else None,
                live_count=p.live_count,
            )
            for p, x in zip(self.points, self.iterates)
        ]


def write_csv(path: Path, records: Sequence[RunRecord]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for rec in records:
            writer.writerow(rec.csv_row())
    return path


def read_csv(path: Path) -> list[dict[str, str]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
