import math

import numpy as np
import pytest

from src.core.meter import GradMeter
from src.problems.profiling import fit_affine_envelope, linear_fit, profile_B, rate_shape_fits
from src.problems.synthetic import ForcedRadiusProblem, LinearProblem, ramp_problem


def test_profile_counts_strictly_smaller_radii():
    problem = ForcedRadiusProblem(LinearProblem(np.ones((4, 2))), np.array([0.0, 0.5, 1.0, np.inf]))
    meter = GradMeter(4)
    curve = profile_B(problem, np.zeros(2), [0.0, 0.5, 0.75, 2.0, np.inf], meter)
    assert [f for _, f in curve] == [0.0, 0.25, 0.5, 0.75, 0.75]
    assert meter.passes() == 1.0


def test_ramp_profile_is_linear_at_the_origin():
    problem = ramp_problem(4000, 3, C=1.0, seed=2)
    grid = np.linspace(0.0, 1.2, 25)
    curve = profile_B(problem, np.zeros(3), grid, GradMeter(problem.n))
    fractions = np.array([f for _, f in curve])
    assert np.all(np.diff(fractions) >= 0)
    np.testing.assert_allclose(fractions, np.minimum(1.0, grid), atol=0.04)
    fit = fit_affine_envelope(curve)
    assert fit.slope == pytest.approx(1.0, abs=0.08)
    assert abs(fit.offset) < 0.05
    assert fit.envelope_offset >= fit.offset


def test_linear_fit_recovers_a_line():
    x = np.linspace(0, 3, 20)
    a, b, r2 = linear_fit(x, 0.5 * x + 0.1)
    assert (a, b, r2) == pytest.approx((0.5, 0.1, 1.0))


def test_envelope_covers_every_point():
    curve = [(r, min(1.0, 0.5 * r + 0.1 + 0.02 * np.sin(7 * r))) for r in np.linspace(0, 3, 40)]
    fit = fit_affine_envelope(curve)
    for r, f in curve:
        if f < 1.0:
            assert fit.slope * r + fit.envelope_offset >= f - 1e-12


def test_rate_shape_fits_tell_decays_apart():
    t = np.arange(1.0, 201.0)
    fast = rate_shape_fits(t, np.exp(-np.cbrt(t)))
    slow = rate_shape_fits(t, 1.0 / t)
    assert fast["r2_cuberoot"] == pytest.approx(1.0)
    assert fast["r2_cuberoot"] > fast["r2_log"]
    assert slow["r2_log"] == pytest.approx(1.0)
    assert slow["r2_log"] > slow["r2_cuberoot"]
    assert fast["points"] == 200


def test_rate_shape_fits_drop_zero_errors():
    t = np.arange(1.0, 11.0)
    errors = 1.0 / t
    errors[-3:] = 0.0
    assert rate_shape_fits(t, errors)["points"] == 7


def test_fits_are_nan_without_two_usable_points():
    fits = rate_shape_fits(np.array([0.25, 0.5, 1.0]), np.zeros(3))
    assert fits["points"] == 0
    assert math.isnan(fits["r2_cuberoot"]) and math.isnan(fits["r2_log"])
    fit = fit_affine_envelope([(np.inf, 0.0), (np.inf, 1.0)])
    assert math.isnan(fit.slope) and math.isnan(fit.envelope_offset)
    assert all(math.isnan(v) for v in linear_fit(np.ones(4), np.arange(4.0)))
