# path: src/problems/synthetic.py
"""Small analytic problems for schedule, solver and rate-shape checks."""

from __future__ import annotations

from typing import Optional

import numpy as np
from scipy.optimize import brentq

from src.core.exceptions import InputError
from src.core.problem import Domain, FiniteSumProblem, IFiniteSumProblem


class QuadraticProblem(FiniteSumProblem):
    """f_i(x) = 1/2 (x - c_i)^T H (x - c_i) with a shared PSD matrix H."""

    def __init__(self, H: np.ndarray, centers: np.ndarray) -> None:
        self.H = np.asarray(H, dtype=np.float64)
        self.centers = np.asarray(centers, dtype=np.float64)
        self.n, self.d = self.centers.shape
        self._check_dims()
        if self.H.shape != (self.d, self.d):
            raise InputError(f"H must be {self.d}x{self.d}, got {self.H.shape}")
        self.smoothness = float(np.linalg.eigvalsh(self.H).max())

    @classmethod
    def random(cls, n: int, d: int, seed: int, *, cond: float = 10.0) -> "QuadraticProblem":
        rng = np.random.default_rng(seed)
        q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        eig = np.geomspace(1.0, cond, d) if d > 1 else np.array([1.0])
        return cls(H=(q * eig) @ q.T, centers=rng.standard_normal((n, d)))

    def component_values(self, x: np.ndarray) -> np.ndarray:
        diff = x[None, :] - self.centers
        return 0.5 * np.einsum("ij,jk,ik->i", diff, self.H, diff)

    def data_gradients(self, idx: np.ndarray, x: np.ndarray) -> np.ndarray:
        return (x[None, :] - self.centers[idx]) @ self.H

    def radii(self, idx: np.ndarray, x: np.ndarray) -> np.ndarray:
        # any move changes H (x - c_i) unless H vanishes
        return np.zeros(np.size(idx)) if np.any(self.H) else np.full(np.size(idx), np.inf)

    def optimum(self) -> np.ndarray:
        return self.centers.mean(axis=0)


class LinearProblem(FiniteSumProblem):
    """f_i(x) = <g_i, x>: constant gradients that linger everywhere."""

    def __init__(self, G: np.ndarray, domain: Domain = Domain.UNCONSTRAINED) -> None:
        self.G = np.asarray(G, dtype=np.float64)
        self.n, self.d = self.G.shape
        self._check_dims()
        self.domain = domain
        self.smoothness = 0.0

    def component_values(self, x: np.ndarray) -> np.ndarray:
        return self.G @ x

    def data_gradients(self, idx: np.ndarray, x: np.ndarray) -> np.ndarray:
        return self.G[idx].copy()

    def radii(self, idx: np.ndarray, x: np.ndarray) -> np.ndarray:
        return np.full(np.size(idx), np.inf)


class ForcedRadiusProblem(FiniteSumProblem):
    """Wraps a problem and replaces its radii with a constant or a fixed per-index vector."""

    def __init__(self, inner: IFiniteSumProblem, radii: float | np.ndarray) -> None:
        self.inner = inner
        self.n, self.d = inner.n, inner.d
        self.norm_kind = inner.norm_kind
        self.domain = inner.domain
        self.smoothness = inner.smoothness
        forced = np.broadcast_to(np.asarray(radii, dtype=np.float64), (self.n,)).copy()
        if np.any(forced < 0):
            raise InputError("forced radii must be nonnegative")
        self.forced = forced

    def component_values(self, x: np.ndarray) -> np.ndarray:
        return self.inner.component_values(x)

    def data_gradients(self, idx: np.ndarray, x: np.ndarray) -> np.ndarray:
        return self.inner.data_gradients(idx, x)

    def radii(self, idx: np.ndarray, x: np.ndarray) -> np.ndarray:
        return self.forced[idx].copy()

    def data_gradients_and_radii(self, idx: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.inner.data_gradients(idx, x), self.forced[idx].copy()

    def shared_gradient(self, x: np.ndarray) -> np.ndarray:
        return self.inner.shared_gradient(x)

    def project(self, x: np.ndarray) -> np.ndarray:
        return self.inner.project(x)


class HuberRampProblem(FiniteSumProblem):
    """
    f_i(x) = w_i * h(<a_i, x> - t_i) + lam/2 |x - c|^2, with h the Huber function of width eps.

    Outside the ramp |s| <= eps the data gradient is the constant +-w_i a_i, so the
    radius is (|s| - eps) / |a_i|; inside it is 0.
    """

    def __init__(
        self,
        A: np.ndarray,
        t: np.ndarray,
        w: Optional[np.ndarray] = None,
        *,
        eps: float = 0.1,
        lam: float = 0.1,
        center: Optional[np.ndarray] = None,
    ) -> None:
        self.A = np.asarray(A, dtype=np.float64)
        self.n, self.d = self.A.shape
        self._check_dims()
        self.t = np.asarray(t, dtype=np.float64)
        self.w = np.ones(self.n) if w is None else np.asarray(w, dtype=np.float64)
        if eps <= 0 or lam < 0:
            raise InputError("need eps > 0 and lam >= 0")
        self.eps = float(eps)
        self.lam = float(lam)
        self.center = np.zeros(self.d) if center is None else np.asarray(center, dtype=np.float64)
        self.row_norms = np.linalg.norm(self.A, axis=1)
        self.smoothness = float(np.max(self.w * self.row_norms**2) / self.eps + self.lam)

    def _slack(self, idx: np.ndarray, x: np.ndarray) -> np.ndarray:
        return self.A[idx] @ x - self.t[idx]

    def component_values(self, x: np.ndarray) -> np.ndarray:
        s = self.A @ x - self.t
        a = np.abs(s)
        h = np.where(a <= self.eps, s * s / (2 * self.eps), a - self.eps / 2)
        return self.w * h + 0.5 * self.lam * float(np.dot(x - self.center, x - self.center))

    def _grads_from(self, idx: np.ndarray, s: np.ndarray) -> np.ndarray:
        coef = self.w[idx] * np.clip(s / self.eps, -1.0, 1.0)
        return coef[:, None] * self.A[idx]

    def _radii_from(self, idx: np.ndarray, s: np.ndarray) -> np.ndarray:
        norms = self.row_norms[idx]
        out = np.zeros(np.size(idx))
        outside = np.abs(s) > self.eps
        with np.errstate(divide="ignore", invalid="ignore"):
            out[outside] = (np.abs(s[outside]) - self.eps) / norms[outside]
        out[norms == 0] = np.inf
        return out

    def data_gradients(self, idx: np.ndarray, x: np.ndarray) -> np.ndarray:
        return self._grads_from(idx, self._slack(idx, x))

    def radii(self, idx: np.ndarray, x: np.ndarray) -> np.ndarray:
        return self._radii_from(idx, self._slack(idx, x))

    def data_gradients_and_radii(self, idx: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        s = self._slack(idx, x)
        return self._grads_from(idx, s), self._radii_from(idx, s)

    def shared_gradient(self, x: np.ndarray) -> np.ndarray:
        return self.lam * (x - self.center)

    def optimum(self) -> np.ndarray:
        """
        Closed form when every row is a multiple of one unit direction a (as made by
        `ramp_problem`): off-axis coordinates sit at the center, the axis coordinate is
        a 1-D root.
        """
        norms = self.row_norms
        base = self.A[int(np.argmax(norms))]
        a = base / np.linalg.norm(base)
        scale = self.A @ a
        if not np.allclose(self.A, np.outer(scale, a), atol=1e-12) or self.lam <= 0:
            raise InputError("closed-form optimum needs collinear rows and lam > 0")
        ca = float(a @ self.center)

        def phi(z: float) -> float:
            s = scale * z - self.t
            return float(np.mean(self.w * np.clip(s / self.eps, -1.0, 1.0) * scale)) + self.lam * (z - ca)

        bound = abs(ca) + float(np.max(self.w * np.abs(scale))) / self.lam + 1.0
        z = brentq(phi, -bound, bound, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
        return self.center - ca * a + z * a


def ramp_problem(
    n: int,
    d: int,
    *,
    C: float = 1.0,
    eps: float = 0.01,
    lam: float = 0.01,
    seed: int = 0,
) -> HuberRampProblem:
    """
    Collinear ramps with |t_i| - eps uniform on [0, C]: at x = 0 the share of indices with
    radius below r is min(1, r / C), the beta = 1, alpha = 0 growth law.
    """
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(d)
    a /= np.linalg.norm(a)
    t = rng.choice([-1.0, 1.0], size=n) * (eps + C * rng.random(n))
    center = C * rng.standard_normal(d) / np.sqrt(d)
    return HuberRampProblem(np.tile(a, (n, 1)), t, eps=eps, lam=lam, center=center)


