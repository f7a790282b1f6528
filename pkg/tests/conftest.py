import numpy as np
import pytest

from src.core.meter import GradMeter
from src.core.services.recorder import Recorder
from src.problems.synthetic import HuberRampProblem, QuadraticProblem, ramp_problem


def random_huber(n: int, d: int, seed: int, *, eps: float = 0.1, lam: float = 0.1) -> HuberRampProblem:
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, d)) / np.sqrt(d)
    t = rng.uniform(-2.0, 2.0, size=n)
    return HuberRampProblem(A, t, eps=eps, lam=lam, center=rng.standard_normal(d))


def harness(problem, budget: float = float("inf")):
    meter = GradMeter(problem.n)
    return meter, Recorder(problem, meter, budget=budget, wall_clock=False)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def quad():
    return QuadraticProblem.random(40, 5, seed=3)


@pytest.fixture
def ramp():
    return ramp_problem(64, 4, seed=1)


@pytest.fixture
def huber():
    return random_huber(32, 4, seed=5)
