"""
Logistic model primitives

Probabilities, log-likelihood, score, Fisher information and hat-matrix
leverages for binomial data, plus aggregation and disaggregation of groups.
Everything here is a pure function of its inputs.
"""

import logging
from typing import Any

import numpy as np
from scipy import linalg
from scipy.special import expit

from brlogit.exceptions import DatasetValidationError, DimensionMismatchError, RankDeficientError
from brlogit.models import BinomialDataset, ModelState

logger = logging.getLogger(__name__)

INTEGER_TOL = 1e-9


def sigmoid(eta: Any) -> np.ndarray:
	"""Logistic function, overflow free for any finite input"""
	return expit(np.asarray(eta, dtype=np.float64))


def softplus(eta: Any) -> np.ndarray:
	"""log(1 + exp(eta)) without overflow"""
	return np.logaddexp(0.0, np.asarray(eta, dtype=np.float64))


def _coefficients(beta: Any, data: BinomialDataset) -> np.ndarray:
	beta = np.asarray(beta, dtype=np.float64)
	if beta.shape != (data.p,):
		raise DimensionMismatchError(f'beta has shape {beta.shape}, expected ({data.p},)')
	if not np.all(np.isfinite(beta)):
		raise DatasetValidationError('beta contains NaN or infinite values')
	return beta


def linear_predictor(beta: Any, data: BinomialDataset) -> np.ndarray:
	return data.X @ _coefficients(beta, data)


def predict_probs(beta: Any, data: BinomialDataset) -> np.ndarray:
	"""Success probabilities pi_i = sigmoid(x_i'beta)"""
	return sigmoid(linear_predictor(beta, data))


def model_state(beta: Any, data: BinomialDataset) -> ModelState:
	beta = _coefficients(beta, data)
	pi = sigmoid(data.X @ beta)
	return ModelState(beta=beta, pi=pi, W_diag=data.m * pi * (1.0 - pi))


def log_likelihood(beta: Any, data: BinomialDataset) -> float:
	"""Binomial log-likelihood sum_i y_i eta_i - m_i log(1 + exp(eta_i)), binomial coefficients omitted"""
	eta = linear_predictor(beta, data)
	return float(data.y @ eta - data.m @ softplus(eta))


def score(beta: Any, data: BinomialDataset) -> np.ndarray:
	"""Gradient of the log-likelihood, X'(y - m * pi)"""
	pi = predict_probs(beta, data)
	return data.X.T @ (data.y - data.m * pi)


def _weights(beta: Any, data: BinomialDataset) -> np.ndarray:
	pi = predict_probs(beta, data)
	return data.m * pi * (1.0 - pi)


def weighted_information(X: np.ndarray, w: np.ndarray) -> np.ndarray:
	"""X'diag(w)X, symmetrized"""
	info = (X.T * w) @ X
	return 0.5 * (info + info.T)


def fisher_information(beta: Any, data: BinomialDataset) -> np.ndarray:
	"""Expected (and observed) information X'W(beta)X"""
	return weighted_information(data.X, _weights(beta, data))


def cholesky_factor(info: np.ndarray) -> np.ndarray:
	"""
	Lower Cholesky factor of a p x p information matrix

	Raises:
	    RankDeficientError: when the matrix is not numerically positive definite
	"""
	try:
		factor = linalg.cholesky(info, lower=True, check_finite=True)
	except (linalg.LinAlgError, ValueError) as e:
		raise RankDeficientError(f'information matrix is not positive definite: {e}') from e
	diagonal = np.diag(factor)
	if not np.all(diagonal > 0) or diagonal.min() <= diagonal.max() * 1e-12:
		raise RankDeficientError('information matrix is numerically singular')
	return factor


def solve_information(info: np.ndarray, rhs: np.ndarray) -> np.ndarray:
	"""Solve info @ x = rhs through a Cholesky factorization"""
	factor = cholesky_factor(info)
	return linalg.cho_solve((factor, True), rhs)


def invert_information(info: np.ndarray) -> np.ndarray:
	inverse = solve_information(info, np.eye(info.shape[0]))
	return 0.5 * (inverse + inverse.T)


def log_det_information(info: np.ndarray) -> float:
	factor = cholesky_factor(info)
	return float(2.0 * np.sum(np.log(np.diag(factor))))


def leverages_from_weights(X: np.ndarray, w: np.ndarray) -> np.ndarray:
	"""Diagonal of W^1/2 X (X'WX)^-1 X'W^1/2 without forming the n x n matrix"""
	factor = cholesky_factor(weighted_information(X, w))
	scaled = X * np.sqrt(w)[:, np.newaxis]
	# rows of L^-1 (W^1/2 X)' ; h_i is the squared norm of column i
	solved = linalg.solve_triangular(factor, scaled.T, lower=True)
	return np.einsum('ij,ij->j', solved, solved)


def leverages(beta: Any, data: BinomialDataset) -> np.ndarray:
	"""Hat-matrix leverages h_i at beta; they sum to p"""
	return leverages_from_weights(data.X, _weights(beta, data))


def check_full_rank(data: BinomialDataset) -> None:
	"""
	Verify that X has full column rank

	Raises:
	    RankDeficientError: naming the columns that are linear combinations of earlier ones
	"""
	if data.p > data.n:
		raise RankDeficientError(f'design has more columns ({data.p}) than rows ({data.n})')
	_, r, pivots = linalg.qr(data.X, mode='economic', pivoting=True)
	diagonal = np.abs(np.diag(r))
	tol = diagonal.max() * max(data.X.shape) * np.finfo(np.float64).eps if diagonal.size else 0.0
	rank = int(np.sum(diagonal > tol))
	if rank < data.p:
		names = data.names
		dependent = [names[j] for j in sorted(pivots[rank:])]
		raise RankDeficientError(f'design matrix has rank {rank} < p={data.p}', dependent_columns=dependent)


def _require_integer_counts(data: BinomialDataset) -> None:
	if not data.is_integer_valued(INTEGER_TOL):
		raise DatasetValidationError('disaggregation needs integer-valued responses and trial counts')


def disaggregate(data: BinomialDataset) -> BinomialDataset:
	"""
	Expand every binomial group into m_i binary rows

	Row i becomes y_i successes followed by m_i - y_i failures, groups in their
	original order.
	"""
	_require_integer_counts(data)
	counts = np.round(data.m).astype(np.int64)
	successes = np.round(data.y).astype(np.int64)
	rows = np.repeat(np.arange(data.n), counts)
	position = np.arange(rows.size) - np.repeat(np.cumsum(counts) - counts, counts)
	y = (position < successes[rows]).astype(np.float64)
	return BinomialDataset.from_arrays(data.X[rows], y, np.ones(rows.size), data.column_names)


def aggregate(data: BinomialDataset) -> BinomialDataset:
	"""
	Merge rows with bitwise-identical covariate vectors, summing y and m

	Groups keep the order of their first appearance.
	"""
	index_of: dict[bytes, int] = {}
	group = np.empty(data.n, dtype=np.int64)
	for i, row in enumerate(np.ascontiguousarray(data.X)):
		group[i] = index_of.setdefault(row.tobytes(), len(index_of))
	if len(index_of) == data.n:
		return data
	_, first = np.unique(group, return_index=True)
	y = np.bincount(group, weights=data.y, minlength=len(index_of))
	m = np.bincount(group, weights=data.m, minlength=len(index_of))
	logger.debug(f'Aggregated {data.n} rows into {len(index_of)} covariate patterns')
	return BinomialDataset.from_arrays(data.X[first], y, m, data.column_names)
