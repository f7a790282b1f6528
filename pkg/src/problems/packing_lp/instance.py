# path: src/problems/packing_lp/instance.py
"""
Packing-LP instances: n customers, d resources.

Text file format (whitespace separated, `%.17g` floats so values round-trip exactly):

    n d mu theta seed          header, seed is -1 when unknown
    r_1 ... r_d                revenues
    b_1 ... b_d                capacities
    p_11 ... p_1d              n rows of purchase probabilities
    ...
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from src.core.config import settings
from src.core.exceptions import DataParseError, InputError

OVERFLOW = 0  # resource index with unbounded capacity


@dataclass(frozen=True)
class LpInstance:
    p: np.ndarray  # (n, d) purchase probabilities in [0, 1]
    r: np.ndarray  # (d,) revenues
    b: np.ndarray  # (d,) capacities
    mu: float
    theta: float
    seed: int = -1

    def __post_init__(self) -> None:
        if self.p.ndim != 2 or self.p.shape[1] != self.r.size or self.r.size != self.b.size:
            raise InputError(f"inconsistent shapes p={self.p.shape}, r={self.r.shape}, b={self.b.shape}")
        if np.any(self.p < 0) or np.any(self.p > 1):
            raise InputError("purchase probabilities must lie in [0, 1]")
        if np.any(self.p.max(axis=1) <= 0):
            raise InputError("every customer needs a positive purchase probability")
        if np.any(self.b < 0):
            raise InputError("capacities must be nonnegative")
        if self.mu <= 0:
            raise InputError(f"mu must be positive, got {self.mu}")

    @property
    def n(self) -> int:
        return int(self.p.shape[0])

    @property
    def d(self) -> int:
        return int(self.p.shape[1])

    @property
    def p_bar(self) -> np.ndarray:
        return self.p.max(axis=1)

    def with_theta(self, theta: float) -> "LpInstance":
        return replace(self, theta=float(theta))


def generate_instance(n: int, d: int, seed: int) -> LpInstance:
    """
    p_ij = u_i * v_j * z_ij with u, v ~ U[0.2, 1] and z ~ U[0.5, 1], each row rescaled so its
    maximum is at most 1. Resource 0 is the overflow resource (b = 2n, low revenue); the
    others get r ~ U[revenue_low, revenue_high] and b = capacity_fraction * n / d.
    """
    if d < 2 or n < d:
        raise InputError(f"need n >= d >= 2, got n={n}, d={d}")
    cfg = settings.lp
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.2, 1.0, size=n)
    v = rng.uniform(0.2, 1.0, size=d)
    z = rng.uniform(0.5, 1.0, size=(n, d))
    p = u[:, None] * v[None, :] * z
    p /= np.maximum(p.max(axis=1, keepdims=True), 1.0)

    r = rng.uniform(cfg.revenue_low, cfg.revenue_high, size=d)
    b = np.full(d, cfg.capacity_fraction * n / d)
    r[OVERFLOW] = cfg.overflow_revenue
    b[OVERFLOW] = 2.0 * n
    return LpInstance(p=p, r=r, b=b, mu=cfg.mu, theta=cfg.theta, seed=int(seed))


def save_instance(inst: LpInstance, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"{inst.n} {inst.d} {inst.mu!r} {inst.theta!r} {inst.seed}\n")
        np.savetxt(fh, inst.r[None, :], fmt="%.17g")
        np.savetxt(fh, inst.b[None, :], fmt="%.17g")
        np.savetxt(fh, inst.p, fmt="%.17g")
    return path


def load_instance(path: Path) -> LpInstance:
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 5:
                raise DataParseError("header must be 'n d mu theta seed'", path=str(path), line=1)
            try:
                n, d = int(header[0]), int(header[1])
                mu, theta, seed = float(header[2]), float(header[3]), int(header[4])
            except ValueError as exc:
                raise DataParseError(f"bad header: {exc}", path=str(path), line=1) from exc
            try:
                body = np.loadtxt(fh, ndmin=2)
            except ValueError as exc:
                raise DataParseError(f"bad numeric body: {exc}", path=str(path)) from exc
    except OSError as exc:
        raise DataParseError(f"cannot read instance: {exc}", path=str(path)) from exc

    if body.shape != (n + 2, d):
        raise DataParseError(f"expected {n + 2} rows of {d} values, got {body.shape}", path=str(path))
    return LpInstance(p=body[2:].copy(), r=body[0].copy(), b=body[1].copy(), mu=mu, theta=theta, seed=seed)
