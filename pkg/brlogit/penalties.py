"""
Pseudo-count constructions and prior penalties

The conjugate (Diaconis-Ylvisaker) penalty turns penalized estimation into an
ordinary logistic fit on pseudo-counts. The Clogg correction is the
aggregation-dependent relative that shrinks towards the overall success rate.
Log-prior densities (conjugate, Jeffreys, Cauchy) are returned unnormalized.
"""

import logging
from typing import Any

import numpy as np
from scipy.stats import cauchy

from brlogit.exceptions import DimensionMismatchError, RankDeficientError
from brlogit.model_core import (
	fisher_information,
	leverages_from_weights,
	linear_predictor,
	log_det_information,
	log_likelihood,
	model_state,
	sigmoid,
	softplus,
)
from brlogit.models import BinomialDataset, DYPrior, PriorGrid, PriorKind, PriorSpec

logger = logging.getLogger(__name__)

DEFAULT_CAUCHY_SCALE = 2.5


def default_dy_prior(data: BinomialDataset) -> DYPrior:
	"""Prior mode at the origin with precision p/m"""
	return DYPrior(beta0=np.zeros(data.p), tau=data.p / data.total_trials)


def prior_kappa(prior: DYPrior, data: BinomialDataset) -> np.ndarray:
	"""kappa_i = m_i sigmoid(x_i'beta0), the prior guess for the expected counts"""
	if prior.beta0.shape != (data.p,):
		raise DimensionMismatchError(f'beta0 has length {prior.beta0.size}, expected p={data.p}')
	return data.m * sigmoid(data.X @ prior.beta0)


def beta_prior_parameters(prior: DYPrior, data: BinomialDataset) -> tuple[float, float]:
	"""
	Beta parameters induced on pi by the conjugate prior of a one-parameter model

	Only meaningful when p = n = 1, where the prior on beta is the logit image
	of Beta(tau * kappa, tau * (m - kappa)).
	"""
	if data.n != 1 or data.p != 1:
		raise DimensionMismatchError(f'the Beta representation needs p = n = 1, got p={data.p}, n={data.n}')
	kappa = float(prior_kappa(prior, data)[0])
	return prior.tau * kappa, prior.tau * (data.total_trials - kappa)


def pseudo_counts_default(data: BinomialDataset) -> BinomialDataset:
	"""Responses p/(p+m) * m_i/2 + m/(p+m) * y_i, strictly inside (0, m_i)"""
	p, total = data.p, data.total_trials
	y_tilde = p / (p + total) * data.m / 2.0 + total / (p + total) * data.y
	return data.with_responses(y_tilde)


def pseudo_counts_general(data: BinomialDataset, prior: DYPrior) -> BinomialDataset:
	"""Posterior pseudo-counts kappa_i tau/(tau+1) + y_i/(tau+1)"""
	kappa = prior_kappa(prior, data)
	tau = prior.tau
	y_star = kappa * (tau / (tau + 1.0)) + data.y / (tau + 1.0)
	return data.with_responses(y_star)


def clogg_adjust(data: BinomialDataset) -> BinomialDataset:
	"""Add p * sum(y) / (n m) successes and p / n trials to every row"""
	n, p, total = data.n, data.p, data.total_trials
	extra_successes = p * float(np.sum(data.y)) / (n * total)
	adjusted_m = data.m + p / n
	adjusted_y = np.minimum(data.y + extra_successes, adjusted_m)
	return data.with_responses(adjusted_y, adjusted_m)


def penalized_loglik_dy(beta: Any, data: BinomialDataset) -> float:
	"""
	Conjugate-penalized log-likelihood with beta0 = 0 and tau = p/m

	Equals (p/m + 1) * log_likelihood(beta, pseudo_counts_default(data)).
	"""
	eta = linear_predictor(beta, data)
	ratio = data.p / data.total_trials
	penalty = 0.5 * ratio * float(data.m @ eta) - ratio * float(data.m @ softplus(eta))
	return log_likelihood(beta, data) + penalty


def penalized_loglik_general(beta: Any, data: BinomialDataset, prior: DYPrior) -> float:
	"""Log-posterior up to a constant: l(beta; y) + tau sum kappa_i eta_i - tau sum m_i log(1 + e^eta_i)"""
	return log_likelihood(beta, data) + _dy_log_prior(beta, data, prior)


def penalized_score_dy(beta: Any, data: BinomialDataset) -> np.ndarray:
	"""U(beta) = X'(y - m pi) - p sum_i (m_i/m)(pi_i - 1/2) x_i"""
	state = model_state(beta, data)
	penalty = data.X.T @ (data.m / data.total_trials * (state.pi - 0.5))
	return data.X.T @ (data.y - data.m * state.pi) - data.p * penalty


def penalized_score_general(beta: Any, data: BinomialDataset, prior: DYPrior) -> np.ndarray:
	"""Gradient of penalized_loglik_general"""
	state = model_state(beta, data)
	kappa = prior_kappa(prior, data)
	return data.X.T @ (data.y - data.m * state.pi) + prior.tau * (data.X.T @ (kappa - data.m * state.pi))


def penalized_score_firth(beta: Any, data: BinomialDataset) -> np.ndarray:
	"""U_FI(beta) = X'(y - m pi) - sum_i h_i (pi_i - 1/2) x_i, leverages evaluated at beta"""
	state = model_state(beta, data)
	h = leverages_from_weights(data.X, state.W_diag)
	return data.X.T @ (data.y - data.m * state.pi - h * (state.pi - 0.5))


def penalized_loglik_firth(beta: Any, data: BinomialDataset) -> float:
	"""Jeffreys-penalized log-likelihood l(beta) + 1/2 log det X'W(beta)X"""
	return log_likelihood(beta, data) + 0.5 * log_det_information(fisher_information(beta, data))


def _dy_log_prior(beta: Any, data: BinomialDataset, prior: DYPrior) -> float:
	eta = linear_predictor(beta, data)
	kappa = prior_kappa(prior, data)
	return prior.tau * float(kappa @ eta - data.m @ softplus(eta))


def _cauchy_scales(data: BinomialDataset, prior: PriorSpec) -> np.ndarray:
	if prior.cauchy_scales is None:
		return np.full(data.p, DEFAULT_CAUCHY_SCALE)
	if prior.cauchy_scales.ndim == 0:
		return np.full(data.p, float(prior.cauchy_scales))
	if prior.cauchy_scales.shape != (data.p,):
		raise DimensionMismatchError(f'cauchy_scales has length {prior.cauchy_scales.size}, expected p={data.p}')
	return np.asarray(prior.cauchy_scales)


def log_prior_density(beta: Any, data: BinomialDataset, prior: PriorSpec) -> float:
	"""
	Unnormalized log-prior at beta

	DY: the exponent tau * sum kappa_i eta_i - tau * sum m_i log(1 + e^eta_i).
	Jeffreys: 1/2 log det X'W(beta)X. Cauchy: sum of independent Cauchy(0, scale_r)
	log-densities. Normalizing constants of the first two are omitted.
	"""
	if prior.kind == PriorKind.DY:
		assert prior.dy is not None
		return _dy_log_prior(beta, data, prior.dy)
	if prior.kind == PriorKind.JEFFREYS:
		return 0.5 * log_det_information(fisher_information(beta, data))
	beta = np.asarray(beta, dtype=np.float64)
	if beta.shape != (data.p,):
		raise DimensionMismatchError(f'beta has shape {beta.shape}, expected ({data.p},)')
	return float(np.sum(cauchy.logpdf(beta, loc=0.0, scale=_cauchy_scales(data, prior))))


def _grid_log_density(points: np.ndarray, data: BinomialDataset, prior: PriorSpec) -> np.ndarray:
	"""Vectorized log-prior at each row of points (K x 2)"""
	if prior.kind == PriorKind.CAUCHY:
		return np.sum(cauchy.logpdf(points, loc=0.0, scale=_cauchy_scales(data, prior)), axis=1)

	eta = data.X @ points.T  # n x K
	if prior.kind == PriorKind.DY:
		assert prior.dy is not None
		kappa = prior_kappa(prior.dy, data)
		return prior.dy.tau * (kappa @ eta - data.m @ softplus(eta))

	pi = sigmoid(eta)
	weights = data.m[:, np.newaxis] * pi * (1.0 - pi)
	info = np.einsum('ik,ia,ib->kab', weights, data.X, data.X)
	sign, logdet = np.linalg.slogdet(info)
	if np.any(sign <= 0):
		raise RankDeficientError('information matrix is singular on the prior grid')
	return 0.5 * logdet


def prior_grid(
	data: BinomialDataset,
	prior: PriorSpec,
	bounds: tuple[float, float] = (-5.0, 5.0),
	resolution: int = 101,
) -> PriorGrid:
	"""
	Evaluate a two-coefficient log-prior on a resolution x resolution grid

	The grid spans bounds on both axes and is shifted so its maximum is 0.
	Standardizing the covariates, if wanted, is up to the caller.

	Args:
	    data: Design with exactly two columns
	    prior: Which prior to evaluate
	    bounds: (low, high) for both coefficients
	    resolution: Points per axis

	Returns:
	    PriorGrid with logdensity[i, j] at (beta1[i], beta2[j])
	"""
	if data.p != 2:
		raise DimensionMismatchError(f'prior grids need exactly two coefficients, got p={data.p}')
	low, high = float(bounds[0]), float(bounds[1])
	if not low < high:
		raise ValueError(f'grid bounds must satisfy low < high, got ({low}, {high})')
	if resolution < 2:
		raise ValueError(f'resolution must be at least 2, got {resolution}')

	axis = np.linspace(low, high, resolution)
	b1, b2 = np.meshgrid(axis, axis, indexing='ij')
	points = np.column_stack([b1.ravel(), b2.ravel()])
	values = _grid_log_density(points, data, prior).reshape(resolution, resolution)
	values = values - values.max()
	logger.debug(f'Evaluated {prior.kind.value} prior on a {resolution}x{resolution} grid over [{low}, {high}]^2')
	return PriorGrid(kind=prior.kind, beta1=axis, beta2=axis, logdensity=values)

