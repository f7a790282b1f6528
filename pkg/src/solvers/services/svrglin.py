# path: src/solvers/services/svrglin.py
"""
SVRG-lin and SCSG-lin.

Each epoch s takes a snapshot x^(s) and freezes a set H_s of components whose snapshot
gradients are still valid. Frozen components are left out of sampling; the estimator

    g = D + (live / n) * (data_i(x_k) - data_i(x^(s))) + shared(x_k),   i uniform over live

stays unbiased as long as every frozen gradient is unchanged, which eviction guarantees:
after each step, members whose radius is below the distance from their snapshot leave
their H set and become live again.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.app_logging import get_logger
from src.core.config import settings
from src.core.exceptions import InputError, SolverAbort
from src.core.meter import GradMeter
from src.core.problem import IFiniteSumProblem
from src.core.services import oracle
from src.core.services.recorder import Recorder
from src.solvers.schemas.configs import SvrgLinConfig, SvrgLinVariant
from src.solvers.services.common import StepCallback, StepState, ensure_finite, make_rng, start_point

log = get_logger("solvers.svrglin")


def estimator(
    full_grad_snapshot: np.ndarray,
    grad_i_now: np.ndarray,
    grad_i_snapshot: np.ndarray,
    live_fraction: float,
) -> np.ndarray:
    if not 0.0 <= live_fraction <= 1.0:
        raise InputError(f"live fraction must be in [0, 1], got {live_fraction}")
    return full_grad_snapshot + live_fraction * (grad_i_now - grad_i_snapshot)


def snapshot_mean(grad_sum: np.ndarray, n: int) -> np.ndarray:
    return grad_sum / n


def scsg_batch_size(mbar0: int, s: int, n: int) -> int:
    """min(n, mbar0 * 2^s)."""
    if s >= 62:
        return n
    return int(min(n, mbar0 * (1 << s)))


@dataclass
class HSet:
    """Components frozen at snapshot `snapshot` of epoch `epoch`, ascending by radius."""

    epoch: int
    snapshot: np.ndarray
    members: np.ndarray
    radii: np.ndarray
    stored_grad_sum: np.ndarray
    cursor: int = 0
    dist_bound: float = 0.0

    def __len__(self) -> int:
        return self.members.size - self.cursor

    def alive(self) -> np.ndarray:
        return self.members[self.cursor :]

    def evict(self, dist_bound: float, table: np.ndarray) -> np.ndarray:
        """
        Pops the sorted prefix with radius < dist_bound and removes its stored gradients
        (rows of `table`) from the sum. dist_bound must not be below the true distance.
        """
        stop = self.cursor + int(np.searchsorted(self.radii[self.cursor :], dist_bound, side="left"))
        if stop == self.cursor:
            return np.empty(0, dtype=np.int64)
        out = self.members[self.cursor : stop]
        self.stored_grad_sum = self.stored_grad_sum - table[out].sum(axis=0)
        self.cursor = stop
        return out


def evict(h: HSet, current_x: np.ndarray, dist_bound: float, table: np.ndarray) -> np.ndarray:
    """Module-level form of HSet.evict; `current_x` is kept for audit logging only."""
    evicted = h.evict(dist_bound, table)
    if evicted.size:
        log.debug(
            "hset_evicted",
            extra={"epoch": h.epoch, "count": int(evicted.size), "left": len(h), "x_norm": float(np.abs(current_x).max())},
        )
    return evicted


class LiveSet:
    """Index arena with swap-removal: O(1) uniform draws, O(1) insert and delete."""

    def __init__(self, n: int) -> None:
        self.arena = np.arange(n, dtype=np.int64)
        self.pos = np.arange(n, dtype=np.int64)
        self.size = n

    def __len__(self) -> int:
        return self.size

    def __contains__(self, i: int) -> bool:
        return self.pos[i] >= 0

    def members(self) -> np.ndarray:
        return self.arena[: self.size].copy()

    def remove(self, i: int) -> None:
        p = self.pos[i]
        if p < 0:
            raise SolverAbort("index removed twice from the live set", index=int(i))
        last = self.arena[self.size - 1]
        self.arena[p] = last
        self.pos[last] = p
        self.arena[self.size - 1] = i
        self.pos[i] = -1
        self.size -= 1

    def add(self, i: int) -> None:
        if self.pos[i] >= 0:
            raise SolverAbort("index frozen twice", index=int(i))
        self.arena[self.size] = i
        self.pos[i] = self.size
        self.size += 1

    def sample(self, rng: np.random.Generator) -> int:
        return int(self.arena[rng.integers(0, self.size)])


class _LingeringRun:
    def __init__(
        self,
        problem: IFiniteSumProblem,
        cfg: SvrgLinConfig,
        meter: GradMeter,
        recorder: Recorder,
        callback: Optional[StepCallback],
    ) -> None:
        self.p = problem
        self.cfg = cfg
        self.meter = meter
        self.recorder = recorder
        self.callback = callback
        self.rng = make_rng(cfg.seed)
        self.live = LiveSet(problem.n)
        self.table = np.zeros((problem.n, problem.d))  # snapshot data gradients, one row per index
        self.valid = np.ones(problem.n, dtype=bool)
        self.owner = np.full(problem.n, -1, dtype=np.int64)
        self.hsets: list[HSet] = []

    def frozen_count(self) -> int:
        return sum(len(h) for h in self.hsets)

    def _choose_hset(self, s: int, remaining: np.ndarray) -> np.ndarray:
        if self.cfg.variant is SvrgLinVariant.SCSG_LIN:
            size = scsg_batch_size(self.cfg.mbar0, s, self.p.n)
            if remaining.size > size:
                return np.sort(self.rng.choice(remaining, size=size, replace=False))
        return np.sort(remaining)

    def _snapshot(self, s: int, x0: np.ndarray) -> Optional[tuple[np.ndarray, int]]:
        n = self.p.n
        remaining = self.live.members()
        chosen = self._choose_hset(s, remaining)
        if np.any(self.owner[chosen] >= 0):
            raise SolverAbort("H sets overlap", epoch=s)
        if not self.recorder.can_afford(int(chosen.size)):
            return None

        self.valid[:] = True
        if chosen.size < remaining.size:
            self.valid[remaining] = False

        if chosen.size:
            grads, radii = oracle.data_gradients_and_radii(self.p, chosen, x0, self.meter)
            self.table[chosen] = grads
            self.valid[chosen] = True
            fresh_sum = grads.sum(axis=0)
        else:
            radii = np.empty(0)
            fresh_sum = np.zeros(self.p.d)

        if chosen.size and chosen.size < remaining.size:
            fresh_sum = fresh_sum * (remaining.size / chosen.size)
        if self.hsets:
            D = snapshot_mean(fresh_sum + sum(h.stored_grad_sum for h in self.hsets), n)
        else:
            D = snapshot_mean(fresh_sum, n)

        # radius 0 members would leave at the first step; keep them live from the start
        keep = radii > 0
        if np.any(keep):
            members, member_radii = chosen[keep], radii[keep]
            order = np.lexsort((members, member_radii))
            members, member_radii = members[order], member_radii[order]
            for i in members:
                self.live.remove(int(i))
            self.owner[members] = s
            self.hsets.append(
                HSet(
                    epoch=s,
                    snapshot=x0.copy(),
                    members=members,
                    radii=member_radii,
                    stored_grad_sum=self.table[members].sum(axis=0),
                )
            )
        return D, int(chosen.size)

    def _evict_all(self, x_new: np.ndarray, step_len: float, exact: bool) -> None:
        for h in self.hsets:
            if exact:
                h.dist_bound = self.p.distance(h.snapshot, x_new)
            else:
                h.dist_bound += step_len
            out = evict(h, x_new, h.dist_bound, self.table)
            for i in out:
                self.live.add(int(i))
            if out.size:
                self.owner[out] = -1
        self.hsets = [h for h in self.hsets if len(h) > 0]

    def run(self, x: np.ndarray) -> np.ndarray:
        n = self.p.n
        free_epochs = 0
        self.recorder.record(x, self.frozen_count())
        for s in range(self.cfg.S):
            if self.recorder.exhausted():
                break
            epoch_start = self.meter.oracle_calls
            x0 = x.copy()
            snap = self._snapshot(s, x0)
            if snap is None:
                break
            D, h_size = snap
            for h in self.hsets:
                h.dist_bound = self.p.distance(h.snapshot, x0)
            m = max(2 * h_size, self.cfg.min_epoch_len)
            exact_every = self.cfg.distance_exact_every or (s + 1)
            self.recorder.maybe_record(x, self.frozen_count())

            for k in range(m):
                if self.recorder.exhausted():
                    break
                live = len(self.live)
                if live > 0:
                    i = self.live.sample(self.rng)
                    idx = np.array([i])
                    gi = oracle.data_gradients(self.p, idx, x, self.meter)[0]
                    if not self.valid[i]:
                        self.table[i] = oracle.data_gradients(self.p, idx, x0, self.meter)[0]
                        self.valid[i] = True
                    g = estimator(D, gi, self.table[i], live / n) + self.p.shared_gradient(x)
                else:
                    i = -1
                    g = D + self.p.shared_gradient(x)
                if self.callback is not None:
                    self.callback(
                        StepState(
                            epoch=s,
                            k=k,
                            x=x,
                            direction=g,
                            extras={"sampled": i, "live": live, "hsets": self.hsets, "snapshot": x0, "D": D},
                        )
                    )
                x_new = oracle.project(self.p, x - self.cfg.eta * g)
                ensure_finite(x_new, self.meter, epoch=s, k=k)
                if self.hsets:
                    step_len = self.p.distance(x_new, x)
                    self._evict_all(x_new, step_len, exact=(k + 1) % exact_every == 0)
                x = x_new
                self.recorder.maybe_record(x, self.frozen_count())

            billed = self.meter.oracle_calls - epoch_start
            log.debug(
                "svrglin_epoch_done",
                extra={"epoch": s, "m": m, "h_size": h_size, "frozen": self.frozen_count(), "billed": billed},
            )
            free_epochs = free_epochs + 1 if billed == 0 else 0
            if free_epochs >= settings.solver.max_free_epochs:
                log.info("svrglin_all_frozen_stop", extra={"epoch": s, "passes": self.meter.passes()})
                break

        self.recorder.record(x, self.frozen_count())
        return x


def run_svrglin(
    problem: IFiniteSumProblem,
    cfg: SvrgLinConfig,
    meter: GradMeter,
    recorder: Recorder,
    *,
    x0: Optional[np.ndarray] = None,
    callback: Optional[StepCallback] = None,
) -> np.ndarray:
    return _LingeringRun(problem, cfg, meter, recorder, callback).run(start_point(problem, x0))


def run_scsglin(
    problem: IFiniteSumProblem,
    cfg: SvrgLinConfig,
    meter: GradMeter,
    recorder: Recorder,
    *,
    x0: Optional[np.ndarray] = None,
    callback: Optional[StepCallback] = None,
) -> np.ndarray:
    if cfg.variant is not SvrgLinVariant.SCSG_LIN:
        cfg = cfg.model_copy(update={"variant": SvrgLinVariant.SCSG_LIN})
    return _LingeringRun(problem, cfg, meter, recorder, callback).run(start_point(problem, x0))
