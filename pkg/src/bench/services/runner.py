# path: src/bench/services/runner.py
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np
from pydantic import ValidationError

from src.app_logging import get_logger
from src.bench.schemas.run_config import MethodName, MethodSpec, ProblemKind, ProblemSpec, RunConfig
from src.core.config import settings
from src.core.exceptions import ConfigError, SolverAbort
from src.core.meter import GradMeter
from src.core.problem import IFiniteSumProblem
from src.core.schemas.run_record import RunRecord
from src.core.services.recorder import Recorder
from src.problems.packing_lp.instance import LpInstance, generate_instance, load_instance
from src.problems.packing_lp.primal import primal_error
from src.problems.packing_lp.problem import PackingLpProblem
from src.problems.svm.dataset import SvmDataset, parse_libsvm, rescale
from src.problems.svm.gaussian import GaussianSpec, generate_gaussian
from src.problems.svm.problem import SvmProblem
from src.problems.synthetic import ForcedRadiusProblem, QuadraticProblem, ramp_problem
from src.solvers.schemas.configs import BaselineConfig, BaselineMethod, GdLinConfig, SvrgLinConfig, SvrgLinVariant
from src.solvers.services.baselines import run_baseline
from src.solvers.services.gdlin import run_gdlin
from src.solvers.services.svrglin import run_scsglin, run_svrglin

log = get_logger("bench.runner")

SolverFn = Callable[[IFiniteSumProblem, GradMeter, Recorder], np.ndarray]


@dataclass(frozen=True)
class BuiltProblem:
    problem: IFiniteSumProblem
    spec: ProblemSpec
    seed: int
    lp: Optional[LpInstance] = None
    x_star: Optional[np.ndarray] = None  # closed-form optimum when the problem has one
    scoring: Optional[IFiniteSumProblem] = None  # unsmoothed objective of a smoothed SVM

    @property
    def scored(self) -> IFiniteSumProblem:
        return self.scoring if self.scoring is not None else self.problem

    def describe(self) -> dict[str, Any]:
        return {"kind": self.spec.kind.value, "n": self.problem.n, "d": self.problem.d, "seed": self.seed}


@dataclass
class RunResult:
    config: RunConfig
    recorder: Recorder
    meter: GradMeter
    aborted: bool = False
    abort_reason: Optional[str] = None
    x: Optional[np.ndarray] = None
    records: list[RunRecord] = field(default_factory=list)

    @property
    def method(self) -> str:
        return self.config.method.name.value

    @property
    def eta(self) -> Optional[float]:
        return self.config.method.eta

    @property
    def passes(self) -> float:
        return self.meter.passes()

    @property
    def final_objective(self) -> float:
        if self.aborted:
            return float("inf")
        value = self.recorder.final_objective()
        return value if np.isfinite(value) else float("inf")

    @property
    def min_objective(self) -> float:
        return self.recorder.min_objective()


def _unsmoothed(ds: SvmDataset, spec: ProblemSpec) -> Optional[SvmProblem]:
    """Smoothed runs are scored on the plain hinge objective."""
    if ds.mu_smooth == 0:
        return None
    return SvmProblem(ds.with_smoothing(0.0), zone_radius=spec.zone_radius)


def build_problem(spec: ProblemSpec, seed: int) -> BuiltProblem:
    kind = spec.kind
    lp: Optional[LpInstance] = None
    x_star: Optional[np.ndarray] = None
    scoring: Optional[IFiniteSumProblem] = None

    if kind is ProblemKind.LP:
        lp = load_instance(spec.data) if spec.data is not None else generate_instance(spec.n, spec.d, seed)
        if spec.mu is not None or spec.theta is not None:
            lp = LpInstance(
                p=lp.p,
                r=lp.r,
                b=lp.b,
                mu=spec.mu if spec.mu is not None else lp.mu,
                theta=spec.theta if spec.theta is not None else lp.theta,
                seed=lp.seed,
            )
        problem: IFiniteSumProblem = PackingLpProblem(lp)
    elif kind is ProblemKind.SVM:
        if spec.data is None:
            raise ConfigError("problem.kind = svm needs problem.data (a LibSVM file) or --data")
        if not spec.data.exists():
            raise ConfigError(f"dataset not found: {spec.data}")
        ds = parse_libsvm(spec.data, lam=spec.lam, mu_smooth=spec.mu_smooth)
        if spec.rescale:
            ds = rescale(ds)
        problem = SvmProblem(ds, zone_radius=spec.zone_radius)
        scoring = _unsmoothed(ds, spec)
    elif kind is ProblemKind.GAUSSIAN:
        gspec = GaussianSpec(
            n=spec.n, d=spec.d, sigma=spec.sigma, kappa=spec.kappa, mean_ratio=spec.mean_ratio, seed=seed
        )
        ds = generate_gaussian(gspec, lam=spec.lam)
        if spec.mu_smooth:
            ds = ds.with_smoothing(spec.mu_smooth)
        problem = SvmProblem(ds, zone_radius=spec.zone_radius)
        scoring = _unsmoothed(ds, spec)
    elif kind is ProblemKind.QUADRATIC:
        quad = QuadraticProblem.random(spec.n, spec.d, seed)
        x_star = quad.optimum()
        problem = quad
    else:
        ramp = ramp_problem(spec.n, spec.d, seed=seed)
        x_star = ramp.optimum()
        problem = ramp

    if spec.forced_radius is not None:
        problem = ForcedRadiusProblem(problem, spec.forced_radius)
    log.info("problem_built", extra={"kind": kind.value, "n": problem.n, "d": problem.d, "seed": seed})
    return BuiltProblem(problem=problem, spec=spec, seed=seed, lp=lp, x_star=x_star, scoring=scoring)


def _set(spec: MethodSpec, *names: str) -> dict[str, Any]:
    return {k: getattr(spec, k) for k in names if getattr(spec, k) is not None}


def build_solver(spec: MethodSpec, seed: int) -> SolverFn:
    """Maps a method spec onto its solver config; invalid combinations raise ConfigError."""
    name = spec.name
    try:
        if name is MethodName.GD_LIN:
            C = spec.C if spec.C is not None else spec.eta
            if C is None:
                raise ConfigError("gd_lin needs method.C (or method.eta, read as C)")
            gd_cfg = GdLinConfig(mode=spec.mode, C=C, **_set(spec, "S", "D", "L", "warmup_steps", "warmup_eta"))
            return lambda p, m, r: run_gdlin(p, gd_cfg, m, r)

        if name in (MethodName.SVRG_LIN, MethodName.SCSG_LIN):
            if spec.eta is None:
                raise ConfigError(f"{name.value} needs method.eta")
            variant = SvrgLinVariant.SCSG_LIN if name is MethodName.SCSG_LIN else SvrgLinVariant.SVRG_LIN
            lin_cfg = SvrgLinConfig(
                eta=spec.eta,
                variant=variant,
                seed=seed,
                **_set(spec, "S", "mbar0", "min_epoch_len", "distance_exact_every"),
            )
            run = run_scsglin if variant is SvrgLinVariant.SCSG_LIN else run_svrglin
            return lambda p, m, r: run(p, lin_cfg, m, r)

        base_cfg = BaselineConfig(
            method=BaselineMethod(name.value),
            seed=seed,
            **_set(spec, "eta", "S", "epoch_len", "mbar0", "lam"),
        )
        return lambda p, m, r: run_baseline(p, base_cfg, m, r)
    except ValidationError as exc:
        raise ConfigError(f"method {name.value}: {exc.errors()[0]['msg']}") from exc


def execute_run(cfg: RunConfig, built: Optional[BuiltProblem] = None) -> RunResult:
    """
    Runs one config under its pass budget. A SolverAbort is captured in the result so that
    tuning can keep going; callers decide whether it is fatal.
    """
    if built is None:
        built = build_problem(cfg.problem, cfg.problem_seed())
    solver = build_solver(cfg.method, cfg.seed)
    meter = GradMeter(built.problem.n)
    recorder = Recorder(
        built.problem, meter, budget=cfg.budget, wall_clock=cfg.output.wall_clock, scoring=built.scoring
    )
    result = RunResult(config=cfg, recorder=recorder, meter=meter)
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            result.x = solver(built.problem, meter, recorder)
    except SolverAbort as exc:
        result.aborted = True
        result.abort_reason = str(exc)
        log.warning(
            "run_aborted",
            extra={"method": result.method, "eta": result.eta, "passes": meter.passes(), "reason": str(exc)},
        )
    else:
        log.info(
            "run_done",
            extra={
                "method": result.method,
                "eta": result.eta,
                "passes": meter.passes(),
                "final_objective": result.final_objective,
            },
        )
    return result


def finalize_run(result: RunResult, built: BuiltProblem, f_star: float, opt: Optional[float]) -> list[RunRecord]:
    primal_fn = None
    if built.lp is not None and opt is not None:
        inst = built.lp
        primal_fn = lambda x: primal_error(inst, x, opt)  # noqa: E731
    result.records = result.recorder.finalize(f_star, primal_fn)
    return result.records


def checkpoint_units(n: int) -> int:
    return max(1, int(round(n * settings.solver.checkpoint_fraction)))
