# path: src/solvers/services/baselines.py
from __future__ import annotations

from typing import Optional

import numpy as np

from src.app_logging import get_logger
from src.core.config import settings
from src.core.exceptions import ConfigError, SolverAbort
from src.core.meter import GradMeter
from src.core.problem import IFiniteSumProblem
from src.core.services import oracle
from src.core.services.recorder import Recorder
from src.solvers.schemas.configs import BaselineConfig, BaselineMethod
from src.solvers.services.common import StepCallback, StepState, ensure_finite, make_rng, start_point
from src.solvers.services.svrglin import estimator, scsg_batch_size, snapshot_mean

log = get_logger("solvers.baselines")


def _gd(p, cfg, meter, rec, x, callback):
    n = p.n
    for k in range(cfg.S):
        if not rec.can_afford(n):
            break
        g = oracle.full_gradient(p, x, meter)
        if callback is not None:
            callback(StepState(epoch=k, k=0, x=x, direction=g))
        x = oracle.project(p, x - cfg.eta * g)
        ensure_finite(x, meter, method="gd", step=k)
        rec.maybe_record(x)
    return x


def _svrg(p, cfg, meter, rec, x, callback):
    n = p.n
    all_idx = np.arange(n)
    epoch_len = cfg.epoch_len or 2 * n
    rng = make_rng(cfg.seed)
    for s in range(cfg.S):
        if not rec.can_afford(n):
            break
        x0 = x.copy()
        snap = oracle.data_gradients(p, all_idx, x0, meter)
        D = snapshot_mean(snap.sum(axis=0), n)
        rec.maybe_record(x)
        for k in range(epoch_len):
            if rec.exhausted():
                break
            i = int(rng.integers(0, n))
            gi = oracle.data_gradients(p, np.array([i]), x, meter)[0]
            g = estimator(D, gi, snap[i], 1.0) + p.shared_gradient(x)
            if callback is not None:
                callback(StepState(epoch=s, k=k, x=x, direction=g, extras={"sampled": i}))
            x = oracle.project(p, x - cfg.eta * g)
            ensure_finite(x, meter, method="svrg", epoch=s, k=k)
            rec.maybe_record(x)
    return x


def _scsg(p, cfg, meter, rec, x, callback):
    n = p.n
    rng = make_rng(cfg.seed)
    for s in range(cfg.S):
        if rec.exhausted():
            break
        x0 = x.copy()
        size = scsg_batch_size(cfg.mbar0, s, n)
        if not rec.can_afford(size):
            break
        batch = np.sort(rng.choice(n, size=size, replace=False)) if size < n else np.arange(n)
        D = snapshot_mean(oracle.data_gradients(p, batch, x0, meter).sum(axis=0), batch.size)
        rec.maybe_record(x)
        for k in range(max(2 * batch.size, settings.solver.min_epoch_len)):
            if rec.exhausted():
                break
            idx = np.array([int(rng.integers(0, n))])
            gi = oracle.data_gradients(p, idx, x, meter)[0]
            gi0 = oracle.data_gradients(p, idx, x0, meter)[0]
            g = estimator(D, gi, gi0, 1.0) + p.shared_gradient(x)
            if callback is not None:
                callback(StepState(epoch=s, k=k, x=x, direction=g, extras={"sampled": int(idx[0])}))
            x = oracle.project(p, x - cfg.eta * g)
            ensure_finite(x, meter, method="scsg", epoch=s, k=k)
            rec.maybe_record(x)
    return x


def _saga(p, cfg, meter, rec, x, callback):
    n = p.n
    rng = make_rng(cfg.seed)
    if not rec.can_afford(n):
        return x
    table = oracle.data_gradients(p, np.arange(n), x, meter)
    aggregate = table.mean(axis=0)
    rec.maybe_record(x)
    for t in range(cfg.S):
        if rec.exhausted():
            break
        i = int(rng.integers(0, n))
        gi = oracle.data_gradients(p, np.array([i]), x, meter)[0]
        g = gi - table[i] + aggregate + p.shared_gradient(x)
        if callback is not None:
            callback(
                StepState(epoch=t // n, k=t % n, x=x, direction=g, extras={"table": table, "aggregate": aggregate})
            )
        aggregate = aggregate + (gi - table[i]) / n
        table[i] = gi
        x = oracle.project(p, x - cfg.eta * g)
        ensure_finite(x, meter, method="saga", step=t)
        rec.maybe_record(x)
        if (t + 1) % n == 0:
            # one pass worth of steps: re-anchor the running mean
            aggregate = table.mean(axis=0)
    return x


def _pegasos(p, cfg, meter, rec, x, callback):
    lam = cfg.lam if cfg.lam is not None else getattr(p, "lam", None)
    if lam is None or not hasattr(p, "hinge_subgradients"):
        raise ConfigError("pegasos needs a hinge-loss problem with a regularization weight")
    rng = make_rng(cfg.seed)
    n = p.n
    for t in range(1, cfg.S + 1):
        if rec.exhausted():
            break
        idx = np.array([int(rng.integers(0, n))])
        sub = p.hinge_subgradients(idx, x)[0]
        meter.bill(1)
        g = lam * x + sub
        if callback is not None:
            callback(StepState(epoch=(t - 1) // n, k=(t - 1) % n, x=x, direction=g))
        x = oracle.project(p, x - g / (lam * t))
        ensure_finite(x, meter, method="pegasos", step=t)
        rec.maybe_record(x)
    return x


_DISPATCH = {
    BaselineMethod.GD: _gd,
    BaselineMethod.SVRG: _svrg,
    BaselineMethod.SCSG: _scsg,
    BaselineMethod.SAGA: _saga,
    BaselineMethod.PEGASOS: _pegasos,
}


def run_baseline(
    problem: IFiniteSumProblem,
    cfg: BaselineConfig,
    meter: GradMeter,
    recorder: Recorder,
    *,
    x0: Optional[np.ndarray] = None,
    callback: Optional[StepCallback] = None,
) -> np.ndarray:
    x = start_point(problem, x0)
    recorder.record(x)
    try:
        x = _DISPATCH[cfg.method](problem, cfg, meter, recorder, x, callback)
    except FloatingPointError as exc:
        raise SolverAbort(str(exc), method=cfg.method.value, passes=meter.passes()) from exc
    recorder.record(x)
    log.debug("baseline_done", extra={"method": cfg.method.value, "passes": meter.passes()})
    return x
