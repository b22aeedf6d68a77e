"""
Fitting engines

Every estimator is a Fisher-scoring ascent on its own objective: plain
log-likelihood (MLE, Clogg), log-likelihood of pseudo-counts (DY) or the
Jeffreys-penalized log-likelihood (Firth). Steps are halved until the objective
does not decrease, and convergence is judged on the max-norm of the
(penalized) score.
"""

import logging
from collections.abc import Callable

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.stats import norm

from brlogit.exceptions import (
	DegenerateResponseError,
	DimensionMismatchError,
	NonConvergenceError,
	RankDeficientError,
	SeparationError,
)
from brlogit.model_core import (
	check_full_rank,
	fisher_information,
	invert_information,
	log_likelihood,
	score,
	solve_information,
)
from brlogit.models import (
	BinomialDataset,
	DYPrior,
	FitConfig,
	FitResult,
	FloatArray,
	Method,
	SeparationDiagnosis,
	SeparationKind,
)
from brlogit.penalties import (
	clogg_adjust,
	default_dy_prior,
	penalized_loglik_dy,
	penalized_loglik_firth,
	penalized_loglik_general,
	penalized_score_firth,
	pseudo_counts_default,
	pseudo_counts_general,
)
from brlogit.separation import detect_separation

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], float]
Gradient = Callable[[np.ndarray], np.ndarray]

# |x'beta| beyond which a converged MLE is checked for separation
SATURATED_ETA = 15.0


class _Ascent(BaseModel):
	model_config = ConfigDict(arbitrary_types_allowed=True)

	beta: FloatArray
	converged: bool
	iterations: int
	grad_norm: float
	# stopped by the divergence bound rather than by the score or the budget
	diverged: bool = False


def _start(data: BinomialDataset, config: FitConfig) -> np.ndarray:
	if config.start is None:
		return np.zeros(data.p)
	start = np.array(config.start, dtype=np.float64)
	if start.shape != (data.p,):
		raise DimensionMismatchError(f'start has shape {start.shape}, expected ({data.p},)')
	return start


def _safe_value(objective: Objective, beta: np.ndarray) -> float:
	try:
		value = objective(beta)
	except RankDeficientError:
		return -np.inf
	return value if np.isfinite(value) else -np.inf


def _is_diverging(beta: np.ndarray, data: BinomialDataset, bound: float) -> bool:
	return bool(np.max(np.abs(beta)) > bound or np.max(np.abs(data.X @ beta)) > bound)


def _fisher_scoring(
	data: BinomialDataset,
	objective: Objective,
	gradient: Gradient,
	information: Callable[[np.ndarray], np.ndarray],
	config: FitConfig,
	label: str,
	divergence_check: bool = False,
) -> _Ascent:
	"""
	Fisher scoring with step-halving

	The step I(beta)^-1 g(beta) is an ascent direction for the objective because
	the information is positive definite. A step is accepted once the objective
	has not decreased (up to rounding); if every halving fails, iteration stops
	without convergence.
	"""
	beta = _start(data, config)
	value = objective(beta)
	grad = gradient(beta)
	iterations = 0

	while True:
		grad_norm = float(np.max(np.abs(grad)))
		if grad_norm < config.grad_tol:
			logger.debug(f'{label}: converged after {iterations} iterations, |score| = {grad_norm:.3e}')
			return _Ascent(beta=beta, converged=True, iterations=iterations, grad_norm=grad_norm)
		if divergence_check and _is_diverging(beta, data, config.divergence_bound):
			logger.debug(f'{label}: iterate left the bound {config.divergence_bound} after {iterations} iterations')
			return _Ascent(beta=beta, converged=False, iterations=iterations, grad_norm=grad_norm, diverged=True)
		if iterations >= config.max_iter:
			return _Ascent(beta=beta, converged=False, iterations=iterations, grad_norm=grad_norm)

		try:
			step = solve_information(information(beta), grad)
		except RankDeficientError as e:
			logger.debug(f'{label}: information became singular at iteration {iterations}: {e}')
			return _Ascent(beta=beta, converged=False, iterations=iterations, grad_norm=grad_norm)

		slack = 1e-12 * (1.0 + abs(value))
		scale = 1.0
		for _ in range(config.step_halving_max + 1):
			candidate = beta + scale * step
			candidate_value = _safe_value(objective, candidate)
			if candidate_value >= value - slack:
				break
			scale *= 0.5
		else:
			logger.debug(f'{label}: no acceptable step after {config.step_halving_max} halvings at iteration {iterations}')
			return _Ascent(beta=beta, converged=False, iterations=iterations, grad_norm=grad_norm)

		beta, value = candidate, candidate_value
		grad = gradient(beta)
		iterations += 1
		logger.debug(f'{label}: iteration {iterations}, objective {value:.10g}, step scale {scale:g}')


def _covariance(beta: np.ndarray, data: BinomialDataset) -> np.ndarray:
	"""Inverse Fisher information at beta; inf/NaN filled when it cannot be inverted"""
	try:
		return invert_information(fisher_information(beta, data))
	except RankDeficientError:
		vcov = np.full((data.p, data.p), np.nan)
		np.fill_diagonal(vcov, np.inf)
		return vcov


def _result(
	method: Method,
	ascent: _Ascent,
	data: BinomialDataset,
	loglik: float,
	separation: SeparationDiagnosis | None = None,
	prior: DYPrior | None = None,
) -> FitResult:
	vcov = _covariance(ascent.beta, data)
	return FitResult(
		method=method,
		beta=ascent.beta,
		std_errors=np.sqrt(np.diag(vcov)),
		vcov=vcov,
		converged=ascent.converged,
		iterations=ascent.iterations,
		final_grad_norm=ascent.grad_norm,
		separation_flag=separation,
		prior=prior,
		loglik=loglik,
		column_names=data.names,
		n_obs=data.n,
		total_trials=data.total_trials,
	)


def _warn_not_converged(label: str, ascent: _Ascent) -> None:
	logger.warning(f'{label} did not converge after {ascent.iterations} iterations (|score| = {ascent.grad_norm:.3e})')


def fit_mle(data: BinomialDataset, config: FitConfig | None = None) -> FitResult:
	"""
	Maximum likelihood by Fisher scoring

	When the iterates leave the divergence bound, the separation detector
	decides: separated data end the fit unconverged with the diagnosis
	attached, otherwise scoring resumes from the last iterate without the bound.
	A fit that runs out of iterations also carries the diagnosis.
	"""
	config = config or FitConfig()
	check_full_rank(data)

	def run(run_config: FitConfig, divergence_check: bool) -> _Ascent:
		return _fisher_scoring(
			data,
			lambda beta: log_likelihood(beta, data),
			lambda beta: score(beta, data),
			lambda beta: fisher_information(beta, data),
			run_config,
			'MLE',
			divergence_check=divergence_check,
		)

	ascent = run(config, divergence_check=True)
	separation = None
	if ascent.diverged:
		separation = detect_separation(data)
		remaining = config.max_iter - ascent.iterations
		if separation.kind == SeparationKind.NONE and remaining > 0:
			logger.debug(f'MLE: no separation behind |beta| = {np.max(np.abs(ascent.beta)):.3g}, continuing without the bound')
			resumed = run(config.model_copy(update={'start': ascent.beta, 'max_iter': remaining}), divergence_check=False)
			ascent = resumed.model_copy(update={'iterations': ascent.iterations + resumed.iterations})

	saturated = bool(np.max(np.abs(data.X @ ascent.beta)) > SATURATED_ETA)
	if separation is None and (saturated or not ascent.converged):
		# a vanishing score at saturated probabilities is not a finite maximizer
		separation = detect_separation(data)
	if separation is not None:
		if separation.kind != SeparationKind.NONE:
			ascent = ascent.model_copy(update={'converged': False})
		elif ascent.converged:
			separation = None
	if not ascent.converged:
		assert separation is not None
		if separation.kind != SeparationKind.NONE:
			logger.warning(f'MLE does not exist: {separation.kind.value} separation detected')
		else:
			_warn_not_converged('MLE', ascent)
	return _result(Method.MLE, ascent, data, log_likelihood(ascent.beta, data), separation=separation)


def _fit_pseudo_counts(
	method: Method,
	data: BinomialDataset,
	pseudo: BinomialDataset,
	prior: DYPrior,
	scale: float,
	loglik: Objective,
	config: FitConfig,
) -> FitResult:
	"""
	Maximize scale * l(beta; pseudo), which equals the penalized log-likelihood up to a constant

	The scaled score is the penalized score of the original data, so the
	reported gradient norm refers to the penalized problem.
	"""
	check_full_rank(data)
	ascent = _fisher_scoring(
		pseudo,
		lambda beta: scale * log_likelihood(beta, pseudo),
		lambda beta: scale * score(beta, pseudo),
		lambda beta: scale * fisher_information(beta, pseudo),
		config,
		method.value.upper(),
	)
	if not ascent.converged:
		_warn_not_converged(method.value.upper(), ascent)
	return _result(method, ascent, data, loglik(ascent.beta), prior=prior)


def fit_dy(data: BinomialDataset, config: FitConfig | None = None) -> FitResult:
	"""Penalized maximum likelihood with the default conjugate prior (beta0 = 0, tau = p/m)"""
	config = config or FitConfig()
	scale = 1.0 + data.p / data.total_trials
	return _fit_pseudo_counts(
		Method.DY,
		data,
		pseudo_counts_default(data),
		default_dy_prior(data),
		scale,
		lambda beta: penalized_loglik_dy(beta, data),
		config,
	)


def fit_dy_general(data: BinomialDataset, prior: DYPrior, config: FitConfig | None = None) -> FitResult:
	"""Posterior mode under a conjugate prior with arbitrary mode beta0 and precision tau"""
	config = config or FitConfig()
	return _fit_pseudo_counts(
		Method.DY,
		data,
		pseudo_counts_general(data, prior),
		prior,
		1.0 + prior.tau,
		lambda beta: penalized_loglik_general(beta, data, prior),
		config,
	)


def fit_firth(data: BinomialDataset, config: FitConfig | None = None) -> FitResult:
	"""
	Firth's bias-reduced estimate

	Solves U_FI(beta) = 0 with quasi-Fisher scoring, recomputing leverages at
	every iterate. Step-halving uses the Jeffreys-penalized log-likelihood, whose
	gradient is U_FI.
	"""
	config = config or FitConfig()
	check_full_rank(data)
	ascent = _fisher_scoring(
		data,
		lambda beta: penalized_loglik_firth(beta, data),
		lambda beta: penalized_score_firth(beta, data),
		lambda beta: fisher_information(beta, data),
		config,
		'Firth',
	)
	if not ascent.converged:
		_warn_not_converged('Firth', ascent)
	return _result(Method.FIRTH, ascent, data, penalized_loglik_firth(ascent.beta, data))


def fit_clogg(data: BinomialDataset, config: FitConfig | None = None) -> FitResult:
	"""Maximum likelihood on Clogg-adjusted data; standard errors refer to the adjusted data"""
	config = config or FitConfig()
	successes = float(np.sum(data.y))
	if successes <= 0 or successes >= data.total_trials:
		raise DegenerateResponseError('Clogg correction needs both successes and failures in the data')
	check_full_rank(data)
	adjusted = clogg_adjust(data)
	ascent = _fisher_scoring(
		adjusted,
		lambda beta: log_likelihood(beta, adjusted),
		lambda beta: score(beta, adjusted),
		lambda beta: fisher_information(beta, adjusted),
		config,
		'Clogg',
	)
	if not ascent.converged:
		_warn_not_converged('Clogg', ascent)
	result = _result(Method.CLOGG, ascent, adjusted, log_likelihood(ascent.beta, adjusted))
	return result.model_copy(update={'n_obs': data.n, 'total_trials': data.total_trials})


def fit_cordeiro_mccullagh(data: BinomialDataset, config: FitConfig | None = None) -> FitResult:
	"""
	Deflated MLE (1 - p/m) * beta_hat

	Raises:
	    SeparationError: when the MLE does not exist
	    NonConvergenceError: when the MLE iteration failed for another reason
	"""
	mle = fit_mle(data, config)
	if not mle.converged:
		diagnosis = mle.separation_flag
		if diagnosis is not None and diagnosis.kind != SeparationKind.NONE:
			raise SeparationError(f'no finite MLE to deflate: {diagnosis.kind.value} separation', diagnosis=diagnosis)
		raise NonConvergenceError('no converged MLE to deflate')
	factor = 1.0 - data.p / data.total_trials
	beta = factor * mle.beta
	ascent = _Ascent(beta=beta, converged=mle.converged, iterations=mle.iterations, grad_norm=mle.final_grad_norm)
	return _result(Method.CORDEIRO_MCCULLAGH, ascent, data, log_likelihood(beta, data))


def fit(data: BinomialDataset, method: Method | str, config: FitConfig | None = None) -> FitResult:
	"""Fit with the estimator named by method"""
	method = Method(method)
	fitters = {
		Method.MLE: fit_mle,
		Method.DY: fit_dy,
		Method.FIRTH: fit_firth,
		Method.CLOGG: fit_clogg,
		Method.CORDEIRO_MCCULLAGH: fit_cordeiro_mccullagh,
	}
	return fitters[method](data, config)


def _require_converged(fit_result: FitResult) -> None:
	if not fit_result.converged:
		raise NonConvergenceError(f'{fit_result.method.value} fit did not converge; Wald inference is undefined')


def wald_interval(fit_result: FitResult, level: float = 0.95) -> np.ndarray:
	"""
	Wald confidence intervals beta_r +- z_{(1+level)/2} se_r

	Returns:
	    Array (p x 2) of (lower, upper) bounds
	"""
	if not 0.0 < level < 1.0:
		raise ValueError(f'level must lie in (0, 1), got {level}')
	_require_converged(fit_result)
	z = float(norm.ppf(0.5 * (1.0 + level)))
	half_width = z * fit_result.std_errors
	return np.column_stack([fit_result.beta - half_width, fit_result.beta + half_width])


def wald_test(fit_result: FitResult) -> tuple[np.ndarray, np.ndarray]:
	"""z statistics beta_r / se_r and two-sided p-values for H0: beta_r = 0"""
	_require_converged(fit_result)
	z = fit_result.beta / fit_result.std_errors
	return z, 2.0 * norm.sf(np.abs(z))
