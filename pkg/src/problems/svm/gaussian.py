# path: src/problems/svm/gaussian.py
from __future__ import annotations

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.problems.svm.dataset import SvmDataset, make_dataset


class GaussianSpec(BaseModel):
    """
    Rows a_i ~ N(m_i, (sigma^2 / d) I) with |m_i| sqrt(d) / sigma = mean_ratio * kappa <= kappa.
    The mean points along one random unit direction, signed by the label.
    """

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    d: int = Field(ge=1)
    sigma: float = Field(gt=0)
    kappa: float = Field(default=1.0, ge=1)
    mean_ratio: float = Field(default=1.0, ge=0, le=1)
    seed: int = 0


def generate_gaussian(spec: GaussianSpec, *, lam: float | None = None) -> SvmDataset:
    rng = np.random.default_rng(spec.seed)
    labels = rng.choice([-1.0, 1.0], size=spec.n)
    direction = rng.standard_normal(spec.d)
    direction /= np.linalg.norm(direction)
    mean_norm = spec.mean_ratio * spec.kappa * spec.sigma / np.sqrt(spec.d)
    noise = rng.standard_normal((spec.n, spec.d)) * (spec.sigma / np.sqrt(spec.d))
    a = labels[:, None] * mean_norm * direction[None, :] + noise
    return make_dataset(a, labels, lam=lam, mu_smooth=0.0)
