# path: src/problems/packing_lp/primal.py
from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from scipy.special import softmax

from src.app_logging import get_logger
from src.core.config import settings
from src.core.exceptions import ConfigError, SolverAbort
from src.problems.packing_lp.instance import LpInstance

log = get_logger("problems.packing_lp")


def _exponents(inst: LpInstance, x: np.ndarray) -> np.ndarray:
    return (inst.r - x)[None, :] * inst.p / (inst.p_bar * inst.mu)[:, None]


def primal_recover(inst: LpInstance, x: np.ndarray, i: int) -> np.ndarray:
    """Softmax assignment row y_i of customer i at bid prices x."""
    e = (inst.r - x) * inst.p[i] / (inst.p_bar[i] * inst.mu)
    return softmax(e)


def primal_matrix(inst: LpInstance, x: np.ndarray) -> np.ndarray:
    return softmax(_exponents(inst, x), axis=1)


def truncated_revenue(inst: LpInstance, y: np.ndarray) -> float:
    """Revenue after cutting the demand on each resource at its capacity."""
    load = np.sum(inst.p * y, axis=0)
    return float(inst.r @ np.minimum(inst.b, load))


def primal_error(inst: LpInstance, x: np.ndarray, opt_value: float) -> float:
    if not opt_value > 0:
        raise ConfigError(f"reference OPT must be positive, got {opt_value}")
    return (opt_value - truncated_revenue(inst, primal_matrix(inst, x))) / opt_value


def exact_lp_opt(inst: LpInstance) -> float:
    """
    OPT of the unregularised LP

        max sum_ij r_j p_ij y_ij  s.t.  sum_i p_ij y_ij <= b_j,  sum_j y_ij = 1,  y >= 0

    solved with HiGHS on sparse constraint matrices.
    """
    n, d = inst.n, inst.d
    if n * d > settings.lp.exact_opt_max_vars:
        raise ConfigError(f"exact OPT limited to {settings.lp.exact_opt_max_vars} variables, got {n * d}")
    c = -(inst.p * inst.r[None, :]).ravel()
    a_eq = sparse.kron(sparse.identity(n, format="csr"), np.ones((1, d)), format="csr")
    cols = np.arange(n * d)
    a_ub = sparse.csr_matrix((inst.p.ravel(), (cols % d, cols)), shape=(d, n * d))
    res = linprog(
        c,
        A_ub=a_ub,
        b_ub=inst.b,
        A_eq=a_eq,
        b_eq=np.ones(n),
        bounds=(0, None),
        method="highs",
    )
    if res.status != 0:
        raise SolverAbort("exact LP solve failed", status=int(res.status), message=str(res.message))
    log.info("lp_exact_opt", extra={"n": n, "d": d, "opt": -float(res.fun)})
    return -float(res.fun)
