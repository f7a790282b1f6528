# path: src/bench/schemas/run_config.py
from __future__ import annotations

import hashlib
from enum import Enum
from pathlib import Path
from typing import Literal, Optional

import orjson
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.solvers.schemas.configs import GdLinMode


class ProblemKind(str, Enum):
    LP = "lp"
    SVM = "svm"
    GAUSSIAN = "gaussian"
    QUADRATIC = "quadratic"
    RAMP = "ramp"


class MethodName(str, Enum):
    GD_LIN = "gd_lin"
    SVRG_LIN = "svrg_lin"
    SCSG_LIN = "scsg_lin"
    GD = "gd"
    SVRG = "svrg"
    SAGA = "saga"
    SCSG = "scsg"
    PEGASOS = "pegasos"

    @property
    def lingering(self) -> bool:
        return self in (MethodName.GD_LIN, MethodName.SVRG_LIN, MethodName.SCSG_LIN)


class BenchSchema(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ProblemSpec(BenchSchema):
    kind: ProblemKind = ProblemKind.LP
    n: int = Field(default=1000, ge=1)
    d: int = Field(default=10, ge=1)
    seed: Optional[int] = None  # run seed when unset
    data: Optional[Path] = None  # LibSVM file (svm) or saved instance (lp)
    rescale: bool = True
    lam: Optional[float] = Field(default=None, gt=0)
    mu_smooth: Optional[float] = Field(default=None, ge=0)
    zone_radius: Optional[Literal["infinite", "zero"]] = None
    mu: Optional[float] = Field(default=None, gt=0)  # lp regularization
    theta: Optional[float] = Field(default=None, ge=0)
    sigma: float = Field(default=1.0, gt=0)
    kappa: float = Field(default=1.0, ge=1)
    mean_ratio: float = Field(default=1.0, ge=0, le=1)
    forced_radius: Optional[float] = Field(default=None, ge=0)


class MethodSpec(BenchSchema):
    name: MethodName
    eta: Optional[float] = Field(default=None, gt=0)
    S: Optional[int] = Field(default=None, ge=1)
    # gd_lin
    mode: GdLinMode = GdLinMode.PRACTICAL
    C: Optional[float] = Field(default=None, gt=0)
    D: Optional[float] = Field(default=None, gt=0)
    L: Optional[float] = Field(default=None, gt=0)
    warmup_steps: Optional[int] = Field(default=None, ge=0)
    warmup_eta: Optional[float] = Field(default=None, gt=0)
    # svrg_lin / scsg_lin / scsg
    mbar0: Optional[int] = Field(default=None, ge=1)
    min_epoch_len: Optional[int] = Field(default=None, ge=1)
    distance_exact_every: Optional[int] = Field(default=None, ge=1)
    # svrg / pegasos
    epoch_len: Optional[int] = Field(default=None, ge=1)
    lam: Optional[float] = Field(default=None, gt=0)


class OutputSpec(BenchSchema):
    path: Optional[Path] = None
    wall_clock: bool = True


class ReferenceSpec(BenchSchema):
    f_star: Optional[float] = None
    opt: Optional[float] = Field(default=None, gt=0)
    eta: Optional[float] = Field(default=None, gt=0)


class GridSpec(BenchSchema):
    """Learning-rate candidates; the winner has the smallest final objective, ties to smaller eta."""

    etas: list[float] = Field(min_length=1)

    @field_validator("etas")
    @classmethod
    def _positive(cls, v: list[float]) -> list[float]:
        if any(e <= 0 for e in v):
            raise ValueError("every eta candidate must be positive")
        return v


class RunConfig(BenchSchema):
    problem: ProblemSpec = ProblemSpec()
    method: MethodSpec
    budget: float = Field(gt=0)
    seed: int = 0
    output: OutputSpec = OutputSpec()
    reference: ReferenceSpec = ReferenceSpec()
    grid: Optional[GridSpec] = None

    def problem_seed(self) -> int:
        return self.problem.seed if self.problem.seed is not None else self.seed

    def with_eta(self, eta: float) -> "RunConfig":
        return self.model_copy(update={"method": self.method.model_copy(update={"eta": eta})})

    def config_hash(self) -> str:
        payload = orjson.dumps(self.model_dump(mode="json"), option=orjson.OPT_SORT_KEYS)
        return hashlib.sha256(payload).hexdigest()[:16]


def grid_from_exponents(exponents: list[int], mantissas: list[float]) -> GridSpec:
    """{m * 10^-k}: the LP grid uses mantissas (1, 3, 5), the SVM grid (1, 2.5, 5, 7.5)."""
    etas = sorted({float(f"{m * 10.0 ** (-k):.12g}") for k in exponents for m in mantissas})
    return GridSpec(etas=etas)
