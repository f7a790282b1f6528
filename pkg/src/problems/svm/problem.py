# path: src/problems/svm/problem.py
from __future__ import annotations

from typing import Literal, Optional

import numpy as np
from scipy import sparse

from src.core.config import settings
from src.core.problem import FiniteSumProblem
from src.problems.svm.dataset import SvmDataset

ZonePolicy = Literal["infinite", "zero"]


def hinge_value(m: np.ndarray, mu: float) -> np.ndarray:
    if mu == 0:
        return np.maximum(0.0, 1.0 - m)
    return np.where(m >= 1.0, 0.0, np.where(m <= 1.0 - mu, (1.0 - m) - mu / 2.0, (1.0 - m) ** 2 / (2.0 * mu)))


def hinge_slope(m: np.ndarray, mu: float) -> np.ndarray:
    """d hinge / d margin; the kink at m = 1 gets 0 when mu = 0."""
    if mu == 0:
        return np.where(m >= 1.0, 0.0, -1.0)
    return np.where(m >= 1.0, 0.0, np.where(m <= 1.0 - mu, -1.0, -(1.0 - m) / mu))


class SvmProblem(FiniteSumProblem):
    """
    f_i(x) = lam/2 |x|^2 + hinge_mu(b_i <x, a_i>).

    The lam x term is the shared gradient; radii cover the hinge part. The gradient is
    constant while the margin stays on one side of the interpolation zone (1 - mu, 1).
    """

    def __init__(self, ds: SvmDataset, *, zone_radius: Optional[ZonePolicy] = None) -> None:
        self.ds = ds
        self.n, self.d = ds.n, ds.d
        self._check_dims()
        self.lam = ds.lam
        self.mu = ds.mu_smooth
        self.zone_radius = zone_radius or settings.svm.zone_radius
        self._ba = sparse.diags(ds.labels) @ ds.a  # rows b_i a_i
        self._ba = self._ba.tocsr()
        self._norms = ds.row_norms
        self.smoothness = float(np.max(self._norms) ** 2 / self.mu + self.lam) if self.mu > 0 else None

    def margins(self, idx: np.ndarray, x: np.ndarray) -> np.ndarray:
        return np.asarray(self._ba[idx] @ x).ravel()

    def component_values(self, x: np.ndarray) -> np.ndarray:
        m = np.asarray(self._ba @ x).ravel()
        return 0.5 * self.lam * float(x @ x) + hinge_value(m, self.mu)

    def _rows_times(self, idx: np.ndarray, coef: np.ndarray) -> np.ndarray:
        return np.asarray((sparse.diags(coef) @ self._ba[idx]).toarray())

    def _radii_from(self, idx: np.ndarray, m: np.ndarray) -> np.ndarray:
        norms = self._norms[idx]
        zone_value = np.inf if self.zone_radius == "infinite" else 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(
                m >= 1.0,
                (m - 1.0) / norms,
                np.where(m <= 1.0 - self.mu, (1.0 - self.mu - m) / norms, zone_value),
            )
        out[norms == 0] = np.inf
        return out

    def data_gradients(self, idx: np.ndarray, x: np.ndarray) -> np.ndarray:
        m = self.margins(idx, x)
        return self._rows_times(idx, hinge_slope(m, self.mu))

    def radii(self, idx: np.ndarray, x: np.ndarray) -> np.ndarray:
        return self._radii_from(idx, self.margins(idx, x))

    def data_gradients_and_radii(self, idx: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        m = self.margins(idx, x)
        return self._rows_times(idx, hinge_slope(m, self.mu)), self._radii_from(idx, m)

    def shared_gradient(self, x: np.ndarray) -> np.ndarray:
        return self.lam * x

    def hinge_subgradients(self, idx: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Plain (unsmoothed) hinge subgradients, 0 at the kink."""
        m = self.margins(idx, x)
        return self._rows_times(idx, hinge_slope(m, 0.0))

    def smoothed_component(self, i: int, x: np.ndarray) -> tuple[float, np.ndarray]:
        idx = np.array([i])
        m = self.margins(idx, x)
        value = 0.5 * self.lam * float(x @ x) + float(hinge_value(m, self.mu)[0])
        grad = self._rows_times(idx, hinge_slope(m, self.mu))[0] + self.lam * x
        return value, grad


def smoothed_component(ds: SvmDataset, i: int, x: np.ndarray) -> tuple[float, np.ndarray]:
    return SvmProblem(ds).smoothed_component(i, x)


def svm_lingering_radius(ds: SvmDataset, i: int, x: np.ndarray, *, zone_radius: Optional[ZonePolicy] = None) -> float:
    return float(SvmProblem(ds, zone_radius=zone_radius).radii(np.array([i]), x)[0])
