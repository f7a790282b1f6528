import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.core.exceptions import ConfigError
from src.core.meter import GradMeter
from src.core.services import oracle
from src.problems.synthetic import LinearProblem, QuadraticProblem, ramp_problem
from src.solvers.schemas.configs import GdLinConfig, GdLinMode
from src.solvers.services.gdlin import m_schedule, run_gdlin, run_truncated_gd, truncated_gd_step
from src.solvers.services.lowbit import IndexSchedule, LingeringCache, build_index_set, refresh_index_set
from tests.conftest import harness, random_huber


class TestTruncatedStep:
    def test_long_gradient_is_cut_to_xi(self):
        x = truncated_gd_step(np.zeros(2), np.array([3.0, 4.0]), xi=1.0, L=1.0)
        np.testing.assert_allclose(x, [-0.6, -0.8])

    def test_short_gradient_takes_the_smooth_step(self):
        x = truncated_gd_step(np.zeros(2), np.array([0.3, 0.4]), xi=1.0, L=1.0)
        np.testing.assert_allclose(x, [-0.3, -0.4])

    def test_zero_gradient_stays_put(self):
        x0 = np.array([1.0, 2.0])
        x = truncated_gd_step(x0, np.zeros(2), xi=0.5, L=2.0)
        np.testing.assert_array_equal(x, x0)
        assert x is not x0

    def test_pure_truncated_step_has_length_xi(self, rng):
        g = rng.standard_normal(5)
        x = truncated_gd_step(np.zeros(5), g, xi=0.01)
        assert np.linalg.norm(x) == pytest.approx(0.01)


class TestEpochSchedule:
    def test_theoretical_first_epoch(self):
        cfg = GdLinConfig(mode=GdLinMode.THEORETICAL, C=1.0, D=1.0, L=1.0)
        assert m_schedule(cfg, 1) == 2
        assert m_schedule(cfg, 0) == 1

    @pytest.mark.parametrize("s, expected", [(0, 100), (1, 110), (2, 121), (25, 1000), (400, 1000)])
    def test_practical(self, s, expected):
        assert m_schedule(GdLinConfig(C=1.0), s) == expected

    def test_negative_epoch(self):
        with pytest.raises(ConfigError):
            m_schedule(GdLinConfig(C=1.0), -1)

    def test_theoretical_needs_c_below_d(self):
        with pytest.raises(ValueError):
            GdLinConfig(mode=GdLinMode.THEORETICAL, C=2.0, D=1.0)
        with pytest.raises(ValueError):
            GdLinConfig(mode=GdLinMode.THEORETICAL, C=1.0)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_cached_direction_equals_full_gradient(seed):
    problem = random_huber(48, 4, seed=seed)
    cfg = GdLinConfig(C=0.5, S=2, warmup_steps=0)
    checked = []

    def audit(state):
        exact = oracle.full_gradient(problem, state.x, GradMeter(problem.n))
        tol = 1e-9 * max(1.0, float(np.linalg.norm(exact)))
        assert np.linalg.norm(state.direction - exact) <= tol
        checked.append(state.k)

    meter, rec = harness(problem)
    run_gdlin(problem, cfg, meter, rec, callback=audit)
    assert len(checked) == 100 + 110


@settings(max_examples=100, deadline=None)
@given(
    n=st.integers(min_value=2, max_value=32),
    m=st.integers(min_value=1, max_value=32),
    seed=st.integers(min_value=0, max_value=2**31 - 1),
    C=st.floats(min_value=0.01, max_value=2.0),
)
def test_cache_aggregate_matches_brute_force_gradient(n, m, seed, C):
    problem = random_huber(n, 3, seed=seed, eps=0.05)
    xi = C / m
    sched = IndexSchedule(n, xi)
    cache = LingeringCache(n, problem.d)
    meter = GradMeter(n)
    x = np.random.default_rng(seed).standard_normal(problem.d)
    for k in range(m):
        build_index_set(sched, k, x, problem, meter, cache)
        g = cache.aggregate + problem.shared_gradient(x)
        exact = problem.full_gradient(x)
        assert np.linalg.norm(g - exact) <= 1e-9 * max(1.0, float(np.linalg.norm(exact)))
        x = truncated_gd_step(x, g, xi)


def test_zero_radius_bills_every_index_every_step(quad):
    meter, rec = harness(quad)
    run_gdlin(quad, GdLinConfig(C=0.1, S=2, warmup_steps=0), meter, rec)
    assert meter.passes() == pytest.approx(210.0)


def test_infinite_radius_bills_one_pass_per_epoch():
    problem = LinearProblem(np.array([[1.0, 0.0], [0.0, 2.0], [1.0, 1.0]]))
    meter, rec = harness(problem)
    run_gdlin(problem, GdLinConfig(C=1.0, S=3, warmup_steps=0), meter, rec)
    assert meter.passes() == pytest.approx(3.0)


def test_epoch_travel_stays_within_c(huber):
    cfg = GdLinConfig(C=0.3, S=3, warmup_steps=0)
    steps: dict[int, list[np.ndarray]] = {}

    def keep(state):
        steps.setdefault(state.epoch, []).append(state.x.copy())

    meter, rec = harness(huber)
    run_gdlin(huber, cfg, meter, rec, callback=keep)
    for xs in steps.values():
        travel = sum(float(np.linalg.norm(b - a)) for a, b in zip(xs, xs[1:]))
        assert travel <= cfg.C * (1 + 1e-9)


def test_budget_stops_the_run(huber):
    meter, rec = harness(huber, budget=5.0)
    run_gdlin(huber, GdLinConfig(C=0.5, S=50, warmup_steps=3), meter, rec)
    assert meter.passes() <= 5.0 + 1e-12
    assert rec.points[-1].pass_count == meter.passes()


def test_warmup_needs_a_step_size():
    problem = LinearProblem(np.ones((2, 2)))
    problem.smoothness = None
    meter, rec = harness(problem)
    with pytest.raises(ConfigError):
        run_gdlin(problem, GdLinConfig(C=1.0, S=1, warmup_steps=2), meter, rec)
    meter, rec = harness(problem)
    run_gdlin(problem, GdLinConfig(C=1.0, S=1, warmup_steps=0), meter, rec)
    assert meter.oracle_calls > 0


class TestTruncatedGdProperties:
    @pytest.mark.parametrize("m", [8, 64])
    def test_distance_and_progress_on_random_quadratics(self, m):
        rng = np.random.default_rng(m)
        for trial in range(50):
            problem = QuadraticProblem.random(6, 4, seed=1000 * m + trial, cond=float(rng.uniform(1.0, 50.0)))
            x_star = problem.optimum()
            f_star = oracle.full_objective(problem, x_star)
            x0 = x_star + rng.standard_normal(4) * rng.uniform(0.1, 5.0)
            R = float(np.linalg.norm(x0 - x_star))
            xi = float(rng.uniform(0.01, 2.0)) * R / m
            L = problem.smoothness
            traj = run_truncated_gd(problem, x0, m, xi, L, GradMeter(problem.n))

            dists = [float(np.linalg.norm(x - x_star)) for x in traj]
            assert all(b <= a * (1 + 1e-12) + 1e-12 for a, b in zip(dists, dists[1:]))

            gap0 = oracle.full_objective(problem, x0) - f_star
            gap = oracle.full_objective(problem, traj[-1]) - f_star
            bound = max(4 * L * R**2 / m, gap0 - m * L * xi**2 / 4)
            assert gap <= bound + 1e-9 * max(1.0, gap0)

    def test_theoretical_rate_bound(self):
        problem = QuadraticProblem.random(20, 3, seed=11, cond=5.0)
        x_star = problem.optimum()
        f_star = oracle.full_objective(problem, x_star)
        D = max(float(np.linalg.norm(x_star)), 1e-3)
        cfg = GdLinConfig(mode=GdLinMode.THEORETICAL, C=D, D=D, L=problem.smoothness, S=40)
        meter, rec = harness(problem)
        x = run_gdlin(problem, cfg, meter, rec)
        m_last = m_schedule(cfg, cfg.S)
        assert oracle.full_objective(problem, x) - f_star <= 4 * problem.smoothness * D**2 / m_last


def _epoch_index_set_mass(problem, m: int, C: float) -> float:
    xi = C / m
    sched = IndexSchedule(problem.n, xi)
    cache = LingeringCache(problem.n, problem.d)
    meter = GradMeter(problem.n)
    x = np.zeros(problem.d)
    total = 0
    for k in range(m):
        members = sched.index_set(k)
        refresh_index_set(sched, k, members, x, problem, meter, cache)
        total += members.size
        x = truncated_gd_step(x, cache.aggregate + problem.shared_gradient(x), xi)
    return total / problem.n


def test_index_set_mass_grows_like_log_squared():
    problem = ramp_problem(400, 4, C=1.0, seed=3)
    ratios = [_epoch_index_set_mass(problem, m, 1.0) / math.log2(m) ** 2 for m in (64, 128, 256, 512)]
    assert max(ratios) <= 4.0
