import numpy as np
import pytest

from src.core.exceptions import DataParseError
from src.problems.svm.dataset import make_dataset, parse_libsvm, rescale
from src.problems.svm.gaussian import GaussianSpec, generate_gaussian
from src.problems.svm.problem import SvmProblem, hinge_slope, hinge_value, smoothed_component, svm_lingering_radius


def _single(a, label=1.0, mu=0.0, lam=0.1):
    return make_dataset(np.atleast_2d(np.asarray(a, dtype=float)), np.array([label]), lam=lam, mu_smooth=mu)


class TestRadius:
    def test_beyond_the_margin(self):
        ds = _single([2.0, 0.0])
        assert svm_lingering_radius(ds, 0, np.array([0.75, 0.0])) == pytest.approx(0.25)

    def test_inside_the_linear_part(self):
        ds = _single([1.0, 0.0], mu=0.01)
        assert svm_lingering_radius(ds, 0, np.array([0.5, 0.0])) == pytest.approx(0.49)

    def test_interpolation_zone_policy(self):
        ds = _single([1.0, 0.0], mu=0.01)
        x = np.array([0.995, 0.0])
        assert svm_lingering_radius(ds, 0, x) == np.inf
        assert svm_lingering_radius(ds, 0, x, zone_radius="zero") == 0.0

    def test_zero_row_never_changes(self):
        ds = make_dataset(np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([1.0, -1.0]), lam=0.1)
        assert SvmProblem(ds).radii(np.array([0]), np.array([3.0, -2.0]))[0] == np.inf


def test_well_classified_component_is_the_regularizer():
    ds = _single([1.0, 1.0], mu=0.01, lam=0.2)
    x = np.array([1.0, 1.0])
    value, grad = smoothed_component(ds, 0, x)
    assert value == pytest.approx(0.5 * 0.2 * 2.0)
    np.testing.assert_allclose(grad, 0.2 * x)


@pytest.mark.parametrize("mu", [0.01, 0.3])
def test_smoothed_hinge_is_continuous_at_the_zone_edges(mu):
    for edge in (1.0 - mu, 1.0):
        m = np.array([edge - 1e-12, edge + 1e-12])
        assert abs(np.diff(hinge_value(m, mu))[0]) < 1e-9
        assert abs(np.diff(hinge_slope(m, mu))[0]) < 1e-9


def test_smoothing_gap_is_at_most_half_mu():
    m = np.linspace(-3.0, 3.0, 2001)
    for mu in (0.01, 0.1, 0.5):
        gap = hinge_value(m, 0.0) - hinge_value(m, mu)
        assert np.all(gap >= -1e-15)
        assert gap.max() <= mu / 2 + 1e-15


def _random_problem(n=40, d=6, mu=0.01, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, d))
    labels = rng.choice([-1.0, 1.0], size=n)
    return SvmProblem(make_dataset(a, labels, lam=0.05, mu_smooth=mu))


@pytest.mark.parametrize("seed", range(4))
def test_component_gradients_match_finite_differences(seed):
    problem = _random_problem(seed=seed)
    rng = np.random.default_rng(100 + seed)
    h = 1e-6
    checked = 0
    while checked < 5:
        x = rng.standard_normal(problem.d) * 0.5
        i = int(rng.integers(0, problem.n))
        m = problem.margins(np.array([i]), x)[0]
        if min(abs(m - 1.0), abs(m - (1.0 - problem.mu))) < 1e-3:
            continue
        g = problem.data_gradients(np.array([i]), x)[0] + problem.shared_gradient(x)
        fd = np.empty(problem.d)
        for j in range(problem.d):
            e = np.zeros(problem.d)
            e[j] = h
            fd[j] = (problem.component_values(x + e)[i] - problem.component_values(x - e)[i]) / (2 * h)
        assert np.linalg.norm(fd - g) <= 1e-5 * max(1.0, float(np.linalg.norm(g)))
        checked += 1


@pytest.mark.parametrize("seed", range(3))
def test_data_gradient_is_unchanged_within_the_radius(seed):
    problem = _random_problem(n=60, seed=seed)
    rng = np.random.default_rng(seed)
    idx = np.arange(problem.n)
    for _ in range(20):
        x = rng.standard_normal(problem.d)
        g0, radii = problem.data_gradients_and_radii(idx, x)
        for i in np.flatnonzero(np.isfinite(radii)):
            u = rng.standard_normal(problem.d)
            u /= np.linalg.norm(u)
            y = x + rng.uniform(0.0, min(radii[i], 1e3)) * u
            g1 = problem.data_gradients(np.array([i]), y)[0]
            assert np.linalg.norm(g1 - g0[i]) <= 1e-10


class TestLibsvm:
    def test_sparse_row(self, tmp_path):
        path = tmp_path / "a.svm"
        path.write_text("+1 3:0.5 7:1\n-1 1:2  # trailing comment\n\n")
        ds = parse_libsvm(path, lam=0.1)
        assert (ds.n, ds.d) == (2, 7)
        np.testing.assert_array_equal(ds.labels, [1.0, -1.0])
        row = ds.a[0].toarray().ravel()
        assert row[2] == 0.5 and row[6] == 1.0 and np.count_nonzero(row) == 2

    def test_zero_label_is_rejected_unless_mapped(self, tmp_path):
        path = tmp_path / "z.svm"
        path.write_text("1 1:1\n0 1:1\n")
        with pytest.raises(DataParseError, match=":2:"):
            parse_libsvm(path)
        assert parse_libsvm(path, zero_label_as_negative=True).labels.tolist() == [1.0, -1.0]

    @pytest.mark.parametrize("line", ["1 0:1", "1 a:b", "1 3", "x 1:1"])
    def test_malformed_tokens(self, tmp_path, line):
        path = tmp_path / "bad.svm"
        path.write_text(line + "\n")
        with pytest.raises(DataParseError):
            parse_libsvm(path)

    def test_declared_feature_count(self, tmp_path):
        path = tmp_path / "f.svm"
        path.write_text("1 2:1\n")
        assert parse_libsvm(path, n_features=10).d == 10
        with pytest.raises(DataParseError):
            parse_libsvm(path, n_features=1)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataParseError):
            parse_libsvm(tmp_path / "nope.svm")


def test_rescale_gives_unit_mean_row_norm(rng):
    ds = make_dataset(rng.standard_normal((30, 4)) * 7.0, rng.choice([-1.0, 1.0], size=30), lam=0.1)
    assert rescale(ds).row_norms.mean() == pytest.approx(1.0)


class TestGaussian:
    def test_is_deterministic(self):
        spec = GaussianSpec(n=100, d=5, sigma=1.0, kappa=2.0, seed=3)
        a, b = generate_gaussian(spec), generate_gaussian(spec)
        np.testing.assert_array_equal(a.a.toarray(), b.a.toarray())
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_noise_scale_matches_sigma(self):
        ds = generate_gaussian(GaussianSpec(n=10_000, d=20, sigma=2.0, mean_ratio=0.0, seed=1))
        assert float(np.mean(ds.row_norms**2)) == pytest.approx(4.0, rel=0.05)
        assert ds.lam == pytest.approx(1e-4)


@pytest.mark.slow
@pytest.mark.parametrize("mu", [0.0, 0.01])
def test_ten_thousand_moves_within_the_radius(mu):
    problem = _random_problem(n=100, mu=mu, seed=9)
    rng = np.random.default_rng(9)
    idx = np.arange(problem.n)
    moved = 0
    while moved < 10_000:
        x = rng.standard_normal(problem.d)
        g0, radii = problem.data_gradients_and_radii(idx, x)
        for i in np.flatnonzero(np.isfinite(radii) & (radii > 0)):
            u = rng.standard_normal(problem.d)
            u /= np.linalg.norm(u)
            y = x + rng.uniform(0.0, radii[i]) * u
            g1 = problem.data_gradients(np.array([i]), y)[0]
            assert np.linalg.norm(g1 - g0[i]) <= 1e-10
            moved += 1
