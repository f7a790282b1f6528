# path: src/solvers/services/lowbit.py
"""
Lowbit bookkeeping for GD-lin.

Within an epoch every step moves at most xi, so the iterate x_k stays within (k - l) * xi
of x_l. A component evaluated at x_l with radius delta keeps its gradient at x_k while
delta >= (k - l) * xi. Iteration k only has to re-evaluate the components that fall out
of that window, and it finds them by walking the lowbit chain of k:

    Lambda_k = U_i [ B_{k_i}(k - k_i) minus B_{k_i}(k_{t-1} - k_i) ]

where (k_0 = 0, ..., k_t = k) is the lowbit sequence of k and B_l(r) are the members of
Lambda_l whose radius at x_l is strictly below r * xi. Buckets are kept sorted by radius,
so every slice is a contiguous range addressed by two cursors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.core.exceptions import InputError, ScheduleError
from src.core.meter import GradMeter
from src.core.problem import IFiniteSumProblem
from src.core.services import oracle


def lowbit(k: int) -> int:
    k = int(k)
    if k <= 0:
        raise InputError(f"lowbit needs k >= 1, got {k}")
    return k & -k


def lowbit_sequence(k: int) -> tuple[int, ...]:
    """(0, ..., k) where every entry is its successor minus the successor's lowbit."""
    k = int(k)
    if k <= 0:
        raise InputError(f"lowbit sequence needs k >= 1, got {k}")
    chain = [k]
    while chain[-1] > 0:
        chain.append(chain[-1] - lowbit(chain[-1]))
    return tuple(reversed(chain))


@dataclass(frozen=True)
class Bucket:
    members: np.ndarray  # ascending by radius, ties by index
    radii: np.ndarray


class IndexSchedule:
    """Sorted-radius buckets and slice cursors for one epoch."""

    def __init__(self, n: int, xi: float) -> None:
        if xi <= 0:
            raise InputError(f"step radius must be positive, got {xi}")
        self.n = int(n)
        self.xi = float(xi)
        self._buckets: dict[int, Bucket] = {}
        self._cursors: dict[tuple[int, int], int] = {}
        self.max_retained = 0

    @property
    def retained(self) -> int:
        return len(self._buckets)

    def bucket(self, ell: int) -> Bucket | None:
        return self._buckets.get(ell)

    def index_set(self, k: int) -> np.ndarray:
        """Indices whose cached gradient may be stale at iteration k. Advances cursors."""
        if k == 0:
            return np.arange(self.n, dtype=np.int64)
        chain = lowbit_sequence(k)
        prev = chain[-2]
        parts: list[np.ndarray] = []
        for ell in chain[:-1]:
            b = self._buckets.get(ell)
            if b is None:
                raise ScheduleError(f"bucket {ell} needed at iteration {k} is missing")
            if ell == prev:
                lo = 0
            else:
                lo = self._cursors.get((ell, prev - ell))
                if lo is None:
                    raise ScheduleError(f"cursor ({ell}, {prev - ell}) needed at iteration {k} is missing")
            threshold = (k - ell) * self.xi
            hi = lo + int(np.searchsorted(b.radii[lo:], threshold, side="left"))
            self._cursors[(ell, k - ell)] = hi
            if hi > lo:
                parts.append(b.members[lo:hi])
        if not parts:
            return np.empty(0, dtype=np.int64)
        return np.concatenate(parts)

    def record(self, k: int, members: np.ndarray, radii: np.ndarray) -> None:
        """Stores Lambda_k with its radii at x_k if a later iteration will slice it."""
        members = np.asarray(members, dtype=np.int64)
        radii = np.asarray(radii, dtype=np.float64)
        if k == 0 or lowbit(k) > 1:
            order = np.lexsort((members, radii))
            self._buckets[k] = Bucket(members=members[order], radii=radii[order])
        self.max_retained = max(self.max_retained, len(self._buckets))
        self._release(k)

    def _release(self, k: int) -> None:
        # bucket l >= 1 serves iterations l+1 .. l+lowbit(l)-1 only
        done = [ell for ell in self._buckets if ell > 0 and ell + lowbit(ell) - 1 <= k]
        for ell in done:
            del self._buckets[ell]
        if done:
            gone = set(done)
            self._cursors = {key: v for key, v in self._cursors.items() if key[0] not in gone}


class LingeringCache:
    """Per-index data gradients and their running mean."""

    def __init__(self, n: int, d: int) -> None:
        self.n = int(n)
        self.per_index = np.zeros((n, d))
        self.aggregate = np.zeros(d)

    def update(self, i: int, new_grad: np.ndarray) -> None:
        self.aggregate += (new_grad - self.per_index[i]) / self.n
        self.per_index[i] = new_grad

    def update_many(self, idx: np.ndarray, new_grads: np.ndarray) -> None:
        if idx.size == 0:
            return
        self.aggregate += (new_grads - self.per_index[idx]).sum(axis=0) / self.n
        self.per_index[idx] = new_grads

    def resync(self) -> float:
        """Recomputes the mean from scratch, returns the relative drift it removed."""
        exact = self.per_index.mean(axis=0)
        scale = max(float(np.linalg.norm(exact)), float(np.abs(self.per_index).max(initial=0.0)), 1e-300)
        drift = float(np.linalg.norm(self.aggregate - exact)) / scale
        self.aggregate = exact
        return drift


def refresh_index_set(
    sched: IndexSchedule,
    k: int,
    members: np.ndarray,
    x_k: np.ndarray,
    problem: IFiniteSumProblem,
    meter: GradMeter,
    cache: LingeringCache,
) -> None:
    """Evaluates (gradient, radius) pairs of Lambda_k at x_k and files the bucket."""
    if members.size:
        grads, radii = oracle.data_gradients_and_radii(problem, members, x_k, meter)
        cache.update_many(members, grads)
    else:
        radii = np.empty(0)
    sched.record(k, members, radii)


def build_index_set(
    sched: IndexSchedule,
    k: int,
    x_k: np.ndarray,
    problem: IFiniteSumProblem,
    meter: GradMeter,
    cache: LingeringCache,
) -> np.ndarray:
    """Builds Lambda_k, refreshes its gradients in the cache and files it for later slicing."""
    members = sched.index_set(k)
    refresh_index_set(sched, k, members, x_k, problem, meter, cache)
    return members
