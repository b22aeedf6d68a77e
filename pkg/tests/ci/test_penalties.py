"""Tests for pseudo-counts, penalized objectives and prior densities."""

import numpy as np
import pytest
from scipy.stats import beta as beta_distribution

from brlogit import BinomialDataset, DimensionMismatchError, DYPrior, PriorKind, PriorSpec
from brlogit.model_core import disaggregate, log_likelihood
from brlogit.penalties import (
	beta_prior_parameters,
	clogg_adjust,
	default_dy_prior,
	log_prior_density,
	penalized_loglik_dy,
	penalized_loglik_firth,
	penalized_loglik_general,
	penalized_score_dy,
	penalized_score_firth,
	penalized_score_general,
	prior_grid,
	pseudo_counts_default,
	pseudo_counts_general,
)


def _numerical_gradient(f, beta: np.ndarray, step: float = 1e-6) -> np.ndarray:
	grad = np.empty_like(beta)
	for r in range(beta.size):
		e = np.zeros_like(beta)
		e[r] = step
		grad[r] = (f(beta + e) - f(beta - e)) / (2 * step)
	return grad


def _numerical_hessian(f, beta: np.ndarray, step: float = 1e-4) -> np.ndarray:
	p = beta.size
	hessian = np.empty((p, p))
	basis = np.eye(p) * step
	for r in range(p):
		for s in range(p):
			er, es = basis[r], basis[s]
			hessian[r, s] = (f(beta + er + es) - f(beta + er - es) - f(beta - er + es) + f(beta - er - es)) / (4 * step**2)
	return 0.5 * (hessian + hessian.T)


def _double_difference(grid) -> float:
	"""Max |L[i,j] - L[i,0] - L[0,j] + L[0,0]|, zero for separable log-densities"""
	L = grid.logdensity
	return float(np.max(np.abs(L - L[:, :1] - L[:1, :] + L[0, 0])))


@pytest.fixture
def correlated_pair(rng) -> BinomialDataset:
	z = rng.normal(size=(60, 2))
	X = np.column_stack([z[:, 0], 0.8 * z[:, 0] + 0.6 * z[:, 1]])
	X = (X - X.mean(axis=0)) / X.std(axis=0)
	y = rng.binomial(1, 0.5, size=60).astype(np.float64)
	return BinomialDataset.from_arrays(X, y, column_names=['a', 'b'])


class TestPseudoCounts:
	def test_default_pseudo_counts_one_observation(self):
		data = BinomialDataset.from_arrays(np.ones((1, 1)), [3.0], [10.0])
		assert pseudo_counts_default(data).y[0] == pytest.approx(35.0 / 11.0)

	def test_pseudo_counts_are_interior(self, rng):
		X = np.column_stack([np.ones(6), rng.normal(size=6)])
		data = BinomialDataset.from_arrays(X, [0, 0, 0, 2, 2, 2], [2, 2, 2, 2, 2, 2])
		pseudo = pseudo_counts_default(data)
		assert np.all(pseudo.y > 0)
		assert np.all(pseudo.y < data.m)

	def test_general_reduces_to_default(self, make_dataset):
		data = make_dataset(15, 3)
		np.testing.assert_allclose(
			pseudo_counts_general(data, default_dy_prior(data)).y,
			pseudo_counts_default(data).y,
			rtol=1e-14,
		)

	def test_prior_length_must_match(self, make_dataset):
		data = make_dataset(10, 3)
		with pytest.raises(DimensionMismatchError):
			pseudo_counts_general(data, DYPrior(beta0=np.zeros(2), tau=1.0))

	def test_general_pseudo_counts_example(self):
		data = BinomialDataset.from_arrays(np.ones((1, 1)), [4.0], [4.0])
		pseudo = pseudo_counts_general(data, DYPrior(beta0=np.zeros(1), tau=1.0))
		assert pseudo.y[0] == pytest.approx(3.0)

	def test_vanishing_precision_returns_the_data(self, make_dataset):
		data = make_dataset(20, 3, max_trials=8)
		pseudo = pseudo_counts_general(data, DYPrior(beta0=np.array([1.0, -2.0, 0.5]), tau=1e-12))
		assert np.max(np.abs(pseudo.y - data.y)) < 1e-10 * np.max(data.m)

	def test_default_pseudo_counts_commute_with_disaggregation(self, make_dataset):
		data = make_dataset(12, 3)
		binary = disaggregate(data)
		groups = np.repeat(np.arange(data.n), np.round(data.m).astype(np.int64))
		group_sums = np.bincount(groups, weights=pseudo_counts_default(binary).y, minlength=data.n)
		np.testing.assert_allclose(group_sums, pseudo_counts_default(data).y, rtol=1e-12)


class TestLikelihoodIdentity:
	def test_penalized_loglik_equals_scaled_pseudo_loglik(self, rng):
		for _ in range(50):
			n = int(rng.integers(2, 101))
			p = int(rng.integers(1, min(n, 10) + 1))
			X = rng.normal(size=(n, p))
			m = rng.integers(1, 6, size=n).astype(np.float64)
			y = rng.binomial(m.astype(np.int64), 0.4).astype(np.float64)
			data = BinomialDataset.from_arrays(X, y, m)
			pseudo = pseudo_counts_default(data)
			scale = data.p / data.total_trials + 1.0
			for _ in range(20):
				beta = rng.normal(scale=1.5, size=p)
				penalized = penalized_loglik_dy(beta, data)
				assert abs(penalized - scale * log_likelihood(beta, pseudo)) < 1e-9 * (1 + abs(penalized))

	def test_general_objective_equals_scaled_pseudo_loglik(self, rng, make_dataset):
		data = make_dataset(20, 3)
		prior = DYPrior(beta0=np.array([0.5, -0.2, 1.0]), tau=0.7)
		pseudo = pseudo_counts_general(data, prior)
		for _ in range(10):
			beta = rng.normal(size=3)
			value = penalized_loglik_general(beta, data, prior)
			assert value == pytest.approx((prior.tau + 1) * log_likelihood(beta, pseudo), rel=1e-10, abs=1e-10)

	def test_value_at_origin(self, make_dataset):
		data = make_dataset(15, 4)
		expected = -(data.total_trials + data.p) * np.log(2.0)
		assert penalized_loglik_dy(np.zeros(4), data) == pytest.approx(expected, rel=1e-12)

	def test_penalized_loglik_is_strictly_concave(self, rng, make_dataset):
		data = make_dataset(25, 3)
		for _ in range(5):
			beta = rng.normal(size=3)
			hessian = _numerical_hessian(lambda b: penalized_loglik_dy(b, data), beta)
			assert np.max(np.linalg.eigvalsh(hessian)) < 0


class TestPenalizedScores:
	def test_dy_score_is_gradient_of_penalized_loglik(self, rng, make_dataset):
		for _ in range(10):
			data = make_dataset(25, 4)
			beta = rng.normal(scale=0.5, size=4)
			numerical = _numerical_gradient(lambda b: penalized_loglik_dy(b, data), beta)
			np.testing.assert_allclose(penalized_score_dy(beta, data), numerical, atol=1e-6)

	def test_general_score_is_gradient(self, rng, make_dataset):
		data = make_dataset(25, 3)
		prior = DYPrior(beta0=np.array([1.0, 0.0, -1.0]), tau=2.0)
		beta = rng.normal(scale=0.5, size=3)
		numerical = _numerical_gradient(lambda b: penalized_loglik_general(b, data, prior), beta)
		np.testing.assert_allclose(penalized_score_general(beta, data, prior), numerical, atol=1e-6)

	def test_firth_score_is_gradient_of_jeffreys_penalized_loglik(self, rng, make_dataset):
		for _ in range(10):
			data = make_dataset(25, 3)
			beta = rng.normal(scale=0.5, size=3)
			numerical = _numerical_gradient(lambda b: penalized_loglik_firth(b, data), beta)
			np.testing.assert_allclose(penalized_score_firth(beta, data), numerical, atol=1e-6)


class TestClogg:
	def test_adds_successes_and_trials(self):
		X = np.column_stack([np.ones(4), [0.0, 1.0, 2.0, 3.0]])
		data = BinomialDataset.from_arrays(X, [0.0, 1.0, 1.0, 2.0], [2.0, 2.0, 2.0, 2.0])
		adjusted = clogg_adjust(data)
		# p * sum(y) / (n m) = 2 * 4 / (4 * 8)
		np.testing.assert_allclose(adjusted.y, data.y + 0.25)
		np.testing.assert_allclose(adjusted.m, data.m + 0.5)

	def test_half_successes_keep_proportions(self):
		X = np.column_stack([np.ones(3), [0.0, 1.0, 2.0]])
		data = BinomialDataset.from_arrays(X, [1.0, 2.0, 3.0], [2.0, 4.0, 6.0])
		adjusted = clogg_adjust(data)
		np.testing.assert_allclose(adjusted.y / adjusted.m, 0.5, rtol=1e-14)


class TestPriorDensities:
	def test_dy_prior_matches_beta_density_in_one_dimension(self):
		data = BinomialDataset.from_arrays(np.ones((1, 1)), [3.0], [10.0])
		prior = DYPrior(beta0=np.array([0.4]), tau=0.8)
		a, b = beta_prior_parameters(prior, data)
		kappa = 10.0 / (1.0 + np.exp(-0.4))
		assert a == pytest.approx(0.8 * kappa)
		assert b == pytest.approx(0.8 * (10.0 - kappa))

		spec = PriorSpec.from_dy(prior)
		differences = []
		for value in (-2.0, -0.5, 0.0, 1.0, 2.5):
			pi = 1.0 / (1.0 + np.exp(-value))
			transformed = beta_distribution.logpdf(pi, a, b) + np.log(pi * (1 - pi))
			differences.append(log_prior_density(np.array([value]), data, spec) - transformed)
		assert np.ptp(differences) < 1e-10

	def test_beta_parameters_need_single_observation(self, make_dataset):
		data = make_dataset(5, 1)
		with pytest.raises(DimensionMismatchError):
			beta_prior_parameters(default_dy_prior(data), data)

	def test_default_spec_uses_default_prior(self, make_dataset):
		data = make_dataset(12, 3)
		spec = PriorSpec.dy_default(data)
		assert spec.kind == PriorKind.DY
		assert spec.dy is not None
		assert spec.dy.tau == default_dy_prior(data).tau
		np.testing.assert_array_equal(spec.dy.beta0, np.zeros(3))

	def test_dy_log_density_is_concave(self, rng, make_dataset):
		data = make_dataset(20, 3)
		spec = PriorSpec.from_dy(DYPrior(beta0=np.array([0.5, -0.5, 1.0]), tau=1.0))
		for _ in range(5):
			beta = rng.normal(size=3)
			hessian = _numerical_hessian(lambda b: log_prior_density(b, data, spec), beta)
			assert np.max(np.linalg.eigvalsh(hessian)) < 1e-6

	def test_dy_log_density_peaks_at_prior_mode(self, make_dataset):
		data = make_dataset(20, 3)
		mode = np.array([0.5, -0.5, 1.0])
		spec = PriorSpec.from_dy(DYPrior(beta0=mode, tau=2.0))
		gradient = _numerical_gradient(lambda b: log_prior_density(b, data, spec), mode)
		np.testing.assert_allclose(gradient, 0.0, atol=1e-6)

	def test_jeffreys_is_symmetric_on_mirrored_design(self, rng):
		half = rng.normal(size=(10, 3))
		X = np.vstack([half, -half])
		data = BinomialDataset.from_arrays(X, np.zeros(20), np.full(20, 3.0))
		spec = PriorSpec.jeffreys()
		for _ in range(5):
			beta = rng.normal(size=3)
			assert log_prior_density(-beta, data, spec) == pytest.approx(log_prior_density(beta, data, spec), rel=1e-12, abs=1e-12)

	def test_cauchy_log_density(self, make_dataset):
		data = make_dataset(5, 2)
		value = log_prior_density(np.array([0.0, 0.0]), data, PriorSpec.cauchy(2.5))
		assert value == pytest.approx(2 * -np.log(np.pi * 2.5))


class TestPriorGrid:
	def test_dy_grid_peaks_at_origin(self, correlated_pair):
		grid = prior_grid(correlated_pair, PriorSpec.from_dy(default_dy_prior(correlated_pair)))
		i, j = np.unravel_index(np.argmax(grid.logdensity), grid.logdensity.shape)
		assert grid.beta1[i] == pytest.approx(0.0, abs=1e-12)
		assert grid.beta2[j] == pytest.approx(0.0, abs=1e-12)
		assert grid.logdensity.max() == 0.0

	def test_cauchy_grid_is_separable(self, correlated_pair):
		grid = prior_grid(correlated_pair, PriorSpec.cauchy(), resolution=41)
		assert _double_difference(grid) < 1e-12

	@pytest.mark.parametrize('kind', [PriorKind.DY, PriorKind.JEFFREYS])
	def test_dy_and_jeffreys_reflect_correlated_predictors(self, correlated_pair, kind):
		prior = PriorSpec.from_dy(default_dy_prior(correlated_pair)) if kind == PriorKind.DY else PriorSpec.jeffreys()
		grid = prior_grid(correlated_pair, prior, resolution=41)
		assert _double_difference(grid) > 1e-3

	def test_grid_needs_two_coefficients(self, make_dataset):
		data = make_dataset(10, 3)
		with pytest.raises(DimensionMismatchError):
			prior_grid(data, PriorSpec.jeffreys())

	def test_grid_rows(self, correlated_pair):
		grid = prior_grid(correlated_pair, PriorSpec.jeffreys(), bounds=(-1.0, 1.0), resolution=3)
		rows = grid.to_rows()
		assert len(rows) == 9
		assert rows[0][:2] == (-1.0, -1.0)
		assert rows[-1][:2] == (1.0, 1.0)
