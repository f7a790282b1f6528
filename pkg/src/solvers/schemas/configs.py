# path: src/solvers/schemas/configs.py
from __future__ import annotations

from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.core.config import settings


class GdLinMode(str, Enum):
    """
    - theoretical: m_s = ceil((1 + C^2/16D^2)^s), step min(xi/|g|, 1/L), epochs s = 1..S
    - practical:   warm-up GD, then m_s = min(cap, ceil(base * growth^s)), step of length xi
    """

    THEORETICAL = "theoretical"
    PRACTICAL = "practical"


class SvrgLinVariant(str, Enum):
    SVRG_LIN = "svrg_lin"
    SCSG_LIN = "scsg_lin"


class BaselineMethod(str, Enum):
    GD = "gd"
    SVRG = "svrg"
    SAGA = "saga"
    SCSG = "scsg"
    PEGASOS = "pegasos"


class SolverSchema(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class GdLinConfig(SolverSchema):
    mode: GdLinMode = GdLinMode.PRACTICAL
    S: int = Field(default=10**6, ge=1)
    C: float = Field(gt=0)
    D: Optional[float] = Field(default=None, gt=0)
    L: Optional[float] = Field(default=None, gt=0)
    warmup_steps: int = Field(default_factory=lambda: settings.solver.warmup_steps, ge=0)
    warmup_eta: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _theoretical_inputs(self) -> "GdLinConfig":
        if self.mode is GdLinMode.THEORETICAL:
            if self.D is None:
                raise ValueError("theoretical mode needs the distance bound D")
            if self.C > self.D:
                raise ValueError(f"theoretical mode needs C <= D, got C={self.C}, D={self.D}")
        return self


class SvrgLinConfig(SolverSchema):
    eta: float = Field(gt=0)
    S: int = Field(default=10**6, ge=1)
    variant: SvrgLinVariant = SvrgLinVariant.SVRG_LIN
    mbar0: int = Field(default_factory=lambda: settings.solver.mbar0, ge=1)
    min_epoch_len: int = Field(default_factory=lambda: settings.solver.min_epoch_len, ge=1)
    # None: exact distance every (s + 1) iterations in epoch s
    distance_exact_every: Optional[int] = Field(default=None, ge=1)
    seed: int = 0


class BaselineConfig(SolverSchema):
    method: BaselineMethod
    eta: Optional[float] = Field(default=None, gt=0)
    epoch_len: Optional[int] = Field(default=None, ge=1)  # svrg: 2n when unset
    mbar0: int = Field(default_factory=lambda: settings.solver.mbar0, ge=1)  # scsg batch schedule
    lam: Optional[float] = Field(default=None, gt=0)  # pegasos; problem's lambda when unset
    S: int = Field(default=10**9, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _eta_where_used(self) -> "BaselineConfig":
        if self.method is not BaselineMethod.PEGASOS and self.eta is None:
            raise ValueError(f"method {self.method.value} needs eta")
        return self
