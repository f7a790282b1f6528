# path: src/bench/services/reference.py
"""
Reference values for error curves.

f*: given in the config, the objective at a closed-form optimum (synthetic problems), or
the best objective of an SVRG-lin run with `reference_budget_factor` times the budget.
The value used for curves is then lowered to the smallest objective any run reached.

OPT (packing LP only): given, solved exactly with HiGHS for small instances, or the
capacity-truncated revenue recovered from the reference dual point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Optional

import numpy as np

from src.app_logging import get_logger
from src.bench.schemas.run_config import MethodName, MethodSpec, RunConfig
from src.bench.services.runner import BuiltProblem, RunResult, execute_run
from src.core.config import settings
from src.core.exceptions import ConfigError, SolverAbort
from src.core.services.oracle import full_objective
from src.problems.packing_lp.primal import exact_lp_opt, primal_matrix, truncated_revenue

log = get_logger("bench.reference")

# methods whose learning rate transfers to the SVRG-lin reference run
_ETA_DONORS = {MethodName.SVRG_LIN, MethodName.SCSG_LIN, MethodName.SVRG, MethodName.SCSG, MethodName.SAGA}


@dataclass(frozen=True)
class ReferenceValues:
    f_star: float
    f_star_method: str  # given | closed_form | reference_run
    opt: Optional[float] = None
    opt_method: Optional[str] = None  # given | exact_highs | reference_revenue
    eta: Optional[float] = None
    passes: Optional[float] = None
    x: Optional[np.ndarray] = None

    def lowered(self, results: Iterable[RunResult]) -> "ReferenceValues":
        """f* = min(reference, every objective any finished run recorded)."""
        best = min((r.min_objective for r in results if not r.aborted), default=float("inf"))
        if best < self.f_star:
            return ReferenceValues(
                f_star=best,
                f_star_method=f"{self.f_star_method}+run_minimum",
                opt=self.opt,
                opt_method=self.opt_method,
                eta=self.eta,
                passes=self.passes,
                x=self.x,
            )
        return self

    def to_manifest(self) -> dict[str, Any]:
        return {
            "f_star": self.f_star,
            "f_star_method": self.f_star_method,
            "opt": self.opt,
            "opt_method": self.opt_method,
            "reference_eta": self.eta,
            "reference_passes": self.passes,
        }


def reference_eta(cfg: RunConfig, hint: Optional[float] = None) -> Optional[float]:
    if cfg.reference.eta is not None:
        return cfg.reference.eta
    if hint is not None:
        return hint
    if cfg.method.name in _ETA_DONORS:
        return cfg.method.eta
    return None


def reference_run(cfg: RunConfig, built: BuiltProblem, eta: float) -> RunResult:
    ref_cfg = cfg.model_copy(
        update={
            "method": MethodSpec(name=MethodName.SVRG_LIN, eta=eta),
            "budget": cfg.budget * settings.solver.reference_budget_factor,
        }
    )
    result = execute_run(ref_cfg, built)
    if result.aborted:
        raise SolverAbort("reference run aborted", eta=eta, reason=result.abort_reason)
    return result


def resolve_reference(cfg: RunConfig, built: BuiltProblem, *, eta_hint: Optional[float] = None) -> ReferenceValues:
    x_ref: Optional[np.ndarray] = None
    eta: Optional[float] = None
    passes: Optional[float] = None

    if cfg.reference.f_star is not None:
        f_star, f_method = float(cfg.reference.f_star), "given"
    elif built.x_star is not None:
        x_ref = built.x_star
        f_star, f_method = full_objective(built.scored, x_ref), "closed_form"
    else:
        eta = reference_eta(cfg, eta_hint)
        if eta is None:
            raise ConfigError(
                f"no reference value for method {cfg.method.name.value}: set reference.f_star or reference.eta"
            )
        ref = reference_run(cfg, built, eta)
        best = int(np.argmin([p.objective for p in ref.recorder.points]))
        x_ref = ref.recorder.iterates[best]
        f_star, f_method, passes = ref.recorder.points[best].objective, "reference_run", ref.passes

    opt, opt_method = None, None
    if built.lp is not None:
        if cfg.reference.opt is not None:
            opt, opt_method = float(cfg.reference.opt), "given"
        elif built.lp.n * built.lp.d <= settings.lp.exact_opt_max_vars:
            opt, opt_method = exact_lp_opt(built.lp), "exact_highs"
        else:
            if x_ref is None:
                raise ConfigError("large LP with a given f* also needs reference.opt")
            opt = truncated_revenue(built.lp, primal_matrix(built.lp, x_ref))
            opt_method = "reference_revenue"

    values = ReferenceValues(
        f_star=f_star, f_star_method=f_method, opt=opt, opt_method=opt_method, eta=eta, passes=passes, x=x_ref
    )
    log.info("reference_resolved", extra=values.to_manifest())
    return values
