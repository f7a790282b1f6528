# path: src/bench/services/tuning.py
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

from src.app_logging import get_logger
from src.bench.schemas.run_config import GridSpec, ProblemKind, RunConfig, grid_from_exponents
from src.bench.services.runner import BuiltProblem, RunResult, build_problem, execute_run
from src.core.config import settings
from src.core.exceptions import SolverAbort

log = get_logger("bench.tuning")


@dataclass
class TuneOutcome:
    best: RunResult
    candidates: list[RunResult]

    @property
    def best_config(self) -> RunConfig:
        return self.best.config

    def top(self, k: int) -> list[RunResult]:
        return rank_candidates(self.candidates)[:k]


def default_grid(kind: ProblemKind) -> GridSpec:
    s = settings.suite
    if kind in (ProblemKind.SVM, ProblemKind.GAUSSIAN):
        return grid_from_exponents(s.svm_grid_exponents, s.svm_grid_mantissas)
    return grid_from_exponents(s.lp_grid_exponents, s.lp_grid_mantissas)


def rank_candidates(candidates: list[RunResult]) -> list[RunResult]:
    """Finished candidates, best first: smallest final objective, ties to the smaller eta."""
    finished = [r for r in candidates if not r.aborted and r.final_objective < float("inf")]
    return sorted(finished, key=lambda r: (r.final_objective, r.eta if r.eta is not None else 0.0))


def select_best(candidates: list[RunResult]) -> RunResult:
    """Smallest final objective (equivalently final error under a shared f*); ties go to the smaller eta."""
    ranked = rank_candidates(candidates)
    if not ranked:
        raise SolverAbort("every candidate aborted", candidates=len(candidates))
    return ranked[0]


def tune(
    base: RunConfig,
    grid: Optional[GridSpec] = None,
    built: Optional[BuiltProblem] = None,
    *,
    threads: Optional[int] = None,
) -> TuneOutcome:
    """
    Runs every eta candidate under the base budget and keeps the best one.

    Candidates share the (read-only) problem; each owns its meter, recorder and RNG.
    """
    if built is None:
        built = build_problem(base.problem, base.problem_seed())
    grid = grid or base.grid or default_grid(base.problem.kind)
    configs = [base.with_eta(eta) for eta in grid.etas]
    workers = max(1, min(threads or settings.threads, len(configs)))
    log.info("tune_start", extra={"method": base.method.name.value, "candidates": len(configs), "workers": workers})

    if workers == 1:
        candidates = [execute_run(c, built) for c in configs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            candidates = list(pool.map(lambda c: execute_run(c, built), configs))

    best = select_best(candidates)
    log.info(
        "tune_done",
        extra={
            "method": base.method.name.value,
            "best_eta": best.eta,
            "best_final_objective": best.final_objective,
            "aborted": sum(1 for c in candidates if c.aborted),
        },
    )
    return TuneOutcome(best=best, candidates=candidates)
