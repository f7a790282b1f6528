# path: src/problems/packing_lp/problem.py
from __future__ import annotations

import math

import numpy as np
from scipy.special import logsumexp, softmax

from src.core.exceptions import InputError
from src.core.problem import Domain, FiniteSumProblem, NormKind
from src.problems.packing_lp.instance import LpInstance


def theta_for_tolerance(eq_tol: float, n: int, d: int) -> float:
    """
    Smallest theta for which moving within the radius changes a component gradient by at
    most eq_tol in every coordinate: n (d - 1) e^{-theta} <= eq_tol.
    """
    if eq_tol <= 0:
        raise InputError(f"eq_tol must be positive, got {eq_tol}")
    return math.log(max(n * (d - 1), 1) / eq_tol)


class PackingLpProblem(FiniteSumProblem):
    """
    Entropy-regularised dual of the packing LP over bid prices x >= 0:

        f_i(x) = mu * n * pbar_i * log Z_i(x) + <x, b>,
        Z_i(x) = sum_j exp((r_j - x_j) p_ij / (pbar_i mu)).

    Data gradient -n p_i * w_i(x) with w_i the softmax weights; shared gradient b.
    Radii are measured in the infinity norm.
    """

    norm_kind = NormKind.INFINITY
    domain = Domain.NONNEGATIVE

    def __init__(self, inst: LpInstance) -> None:
        self.inst = inst
        self.n, self.d = inst.n, inst.d
        self._check_dims()
        self._p_bar = inst.p_bar
        self._scale = 1.0 / (self._p_bar * inst.mu)
        # Hessian n/(pbar mu) diag(p) Cov(w) diag(p), bounded by n pbar / mu
        self.smoothness = float(inst.n * np.max(self._p_bar) / inst.mu)

    def exponents(self, idx: np.ndarray, x: np.ndarray) -> np.ndarray:
        p = self.inst.p[idx]
        return (self.inst.r - x)[None, :] * p * self._scale[idx, None]

    def weights(self, idx: np.ndarray, x: np.ndarray) -> np.ndarray:
        return softmax(self.exponents(idx, x), axis=1)

    def component_values(self, x: np.ndarray) -> np.ndarray:
        idx = self.all_indices()
        lz = logsumexp(self.exponents(idx, x), axis=1)
        return self.inst.mu * self.n * self._p_bar * lz + float(x @ self.inst.b)

    def data_gradients(self, idx: np.ndarray, x: np.ndarray) -> np.ndarray:
        return -self.n * self.inst.p[idx] * self.weights(idx, x)

    def radii(self, idx: np.ndarray, x: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        if self.d == 1:
            return np.full(idx.size, np.inf)
        p = self.inst.p[idx]
        adj = (self.inst.r - x)[None, :] * p
        rows = np.arange(idx.size)
        star = np.argmax(adj, axis=1)
        top = adj[rows, star]
        num = top[:, None] - adj - self.inst.theta * (self._p_bar[idx] * self.inst.mu)[:, None]
        den = p[rows, star][:, None] + p
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(den > 0, num / den, np.inf)
        ratio[rows, star] = np.inf
        return np.maximum(ratio.min(axis=1), 0.0)

    def data_gradients_and_radii(self, idx: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.data_gradients(idx, x), self.radii(idx, x)

    def shared_gradient(self, x: np.ndarray) -> np.ndarray:
        return self.inst.b.copy()
