# path: src/solvers/services/gdlin.py
from __future__ import annotations

import math
from typing import Optional

import numpy as np

from src.app_logging import get_logger
from src.core.config import settings
from src.core.exceptions import ConfigError, SolverAbort
from src.core.meter import GradMeter
from src.core.problem import IFiniteSumProblem
from src.core.services import oracle
from src.core.services.recorder import Recorder
from src.solvers.schemas.configs import GdLinConfig, GdLinMode
from src.solvers.services.common import StepCallback, StepState, ensure_finite, start_point
from src.solvers.services.lowbit import IndexSchedule, LingeringCache, refresh_index_set

log = get_logger("solvers.gdlin")


def truncated_gd_step(x: np.ndarray, g: np.ndarray, xi: float, L: Optional[float] = None) -> np.ndarray:
    """
    x - min(xi/|g|, 1/L) * g, so the displacement never exceeds xi.
    L=None gives the pure truncated step of length exactly xi. g = 0 leaves x unchanged.
    """
    norm = float(np.linalg.norm(g))
    if norm == 0.0:
        return x.copy()
    factor = xi / norm
    if L is not None:
        factor = min(factor, 1.0 / L)
    return x - factor * g


def m_schedule(cfg: GdLinConfig, s: int) -> int:
    if s < 0:
        raise ConfigError(f"epoch index must be >= 0, got {s}")
    if cfg.mode is GdLinMode.THEORETICAL:
        value = (1.0 + cfg.C**2 / (16.0 * cfg.D**2)) ** s
    else:
        sv = settings.solver
        value = min(float(sv.practical_m_cap), sv.practical_m_base * sv.practical_m_growth**s)
    if not math.isfinite(value):
        raise ConfigError(f"epoch length overflows at s={s}")
    # 100 * 1.1 is 110.00000000000001 in floating point
    return max(1, math.ceil(round(value, 9)))


def run_truncated_gd(
    problem: IFiniteSumProblem,
    x0: np.ndarray,
    m: int,
    xi: float,
    L: float,
    meter: GradMeter,
) -> list[np.ndarray]:
    """m truncated steps with exact full gradients; returns x_0..x_m."""
    x = start_point(problem, x0)
    trajectory = [x.copy()]
    for _ in range(m):
        g = oracle.full_gradient(problem, x, meter)
        x = oracle.project(problem, truncated_gd_step(x, g, xi, L))
        ensure_finite(x, meter)
        trajectory.append(x.copy())
    return trajectory


def _resolve_smoothness(problem: IFiniteSumProblem, cfg: GdLinConfig) -> Optional[float]:
    return cfg.L if cfg.L is not None else problem.smoothness


def _warmup(
    problem: IFiniteSumProblem,
    cfg: GdLinConfig,
    x: np.ndarray,
    meter: GradMeter,
    recorder: Recorder,
) -> np.ndarray:
    if cfg.warmup_steps == 0:
        return x
    eta = cfg.warmup_eta
    if eta is None:
        L = _resolve_smoothness(problem, cfg)
        if L is None:
            raise ConfigError("practical GD-lin warm-up needs warmup_eta or a known smoothness L")
        eta = 1.0 / L
    for step in range(cfg.warmup_steps):
        if not recorder.can_afford(problem.n):
            break
        g = oracle.full_gradient(problem, x, meter)
        x = oracle.project(problem, x - eta * g)
        ensure_finite(x, meter, phase="warmup", step=step)
        recorder.maybe_record(x)
        if recorder.exhausted():
            break
    log.info("gdlin_warmup_done", extra={"steps": cfg.warmup_steps, "passes": meter.passes()})
    return x


def run_gdlin(
    problem: IFiniteSumProblem,
    cfg: GdLinConfig,
    meter: GradMeter,
    recorder: Recorder,
    *,
    x0: Optional[np.ndarray] = None,
    callback: Optional[StepCallback] = None,
) -> np.ndarray:
    x = start_point(problem, x0)
    recorder.record(x)

    if cfg.mode is GdLinMode.THEORETICAL:
        L = _resolve_smoothness(problem, cfg)
        if L is None:
            raise ConfigError("theoretical GD-lin needs the smoothness L")
        epochs = range(1, cfg.S + 1)
    else:
        L = None
        x = _warmup(problem, cfg, x, meter, recorder)
        epochs = range(0, cfg.S)

    for s in epochs:
        if recorder.exhausted():
            break
        m = m_schedule(cfg, s)
        xi = cfg.C / m
        sched = IndexSchedule(problem.n, xi)
        cache = LingeringCache(problem.n, problem.d)
        epoch_start = meter.oracle_calls
        travel = 0.0
        stopped = False

        for k in range(m):
            members = sched.index_set(k)
            if not recorder.can_afford(members.size):
                stopped = True
                break
            refresh_index_set(sched, k, members, x, problem, meter, cache)
            g = cache.aggregate + problem.shared_gradient(x)
            if callback is not None:
                callback(
                    StepState(
                        epoch=s,
                        k=k,
                        x=x,
                        direction=g,
                        extras={"refreshed": members, "cache": cache, "retained": sched.retained},
                    )
                )
            if not np.any(g):
                log.info("gdlin_zero_gradient", extra={"epoch": s, "k": k, "passes": meter.passes()})
                stopped = True
                break
            x_new = oracle.project(problem, truncated_gd_step(x, g, xi, L))
            ensure_finite(x_new, meter, epoch=s, k=k)
            travel += float(np.linalg.norm(x_new - x))
            x = x_new
            if recorder.exhausted():
                stopped = True
                break

        if travel > cfg.C * (1.0 + 1e-9):
            raise SolverAbort("epoch travel exceeded C", epoch=s, travel=travel, C=cfg.C)
        drift = cache.resync()
        if drift > settings.solver.drift_rtol:
            log.warning("gdlin_aggregate_drift", extra={"epoch": s, "drift": drift})
        recorder.record(x)
        log.debug(
            "gdlin_epoch_done",
            extra={
                "epoch": s,
                "m": m,
                "epoch_passes": (meter.oracle_calls - epoch_start) / problem.n,
                "max_buckets": sched.max_retained,
            },
        )
        if stopped:
            break

    recorder.record(x)
    return x
