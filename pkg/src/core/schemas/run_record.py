# path: src/core/schemas/run_record.py
from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

CSV_HEADER = ("pass", "wall_ms", "obj_error", "primal_error", "live_count")


class TracePoint(BaseModel):
    """Raw checkpoint taken during a run, before the reference value f* is known."""

    model_config = ConfigDict(frozen=True)

    pass_count: float = Field(ge=0)
    wall_ms: float = Field(ge=0)
    objective: float
    live_count: int | None = None


class RunRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    pass_count: float = Field(ge=0)
    wall_ms: float = Field(ge=0)
    objective_error: float
    primal_error: float | None = None
    live_count: int | None = None

    def csv_row(self) -> list[str]:
        return [
            repr(float(self.pass_count)),
            repr(float(self.wall_ms)),
            repr(float(self.objective_error)),
            "" if self.primal_error is None else repr(float(self.primal_error)),
            "" if self.live_count is None else str(int(self.live_count)),
        ]
