"""
Separation detection

A direction b separates the data when every success lies on the nonnegative
side of x'b and every failure on the nonpositive side. The detector solves

    maximize    sum_k c_k s_k
    subject to  s_k <= (2y_k - 1) x_k'b,   0 <= s_k <= 1

over the binary observations of the disaggregated data. Observations that
share a covariate vector and a response are merged into one class with
multiplicity c_k, which leaves the optimum unchanged and keeps the tableau
small. Fractional counts are handled the same way: row i contributes a success
class of weight y_i and a failure class of weight m_i - y_i.
"""

import logging

import numpy as np

from brlogit.models import BinomialDataset, SeparationDiagnosis, SeparationKind
from brlogit.simplex import maximize

logger = logging.getLogger(__name__)

# a slack counts as saturated (observation strictly separated) above this value
SATURATION_TOL = 1e-7
ZERO_OBJECTIVE_TOL = 1e-9


def _observation_classes(data: BinomialDataset) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
	"""Distinct (x, sign) pairs with their total weight, in order of first appearance"""
	index_of: dict[tuple[bytes, int], int] = {}
	rows: list[np.ndarray] = []
	signs: list[float] = []
	weights: list[float] = []
	X = np.ascontiguousarray(data.X)
	for i in range(data.n):
		for sign, weight in ((1, data.y[i]), (-1, data.m[i] - data.y[i])):
			if weight <= 0:
				continue
			key = (X[i].tobytes(), sign)
			k = index_of.get(key)
			if k is None:
				index_of[key] = len(rows)
				rows.append(X[i])
				signs.append(float(sign))
				weights.append(float(weight))
			else:
				weights[k] += float(weight)
	return np.array(rows), np.array(signs), np.array(weights)


def detect_separation(data: BinomialDataset) -> SeparationDiagnosis:
	"""
	Classify the data as not separated, quasi-completely or completely separated

	Returns:
	    SeparationDiagnosis; for separated data the direction is scaled to unit max-norm
	    and satisfies (2y - 1) x'b >= 0 for every observation
	"""
	rows, signs, weights = _observation_classes(data)
	k, p = rows.shape
	total = float(weights.sum())

	# variables: b_plus (p), b_minus (p), s (k)
	margins = signs[:, np.newaxis] * rows
	A = np.zeros((2 * k, 2 * p + k))
	A[:k, :p] = -margins
	A[:k, p : 2 * p] = margins
	A[:k, 2 * p :] = np.eye(k)
	A[k:, 2 * p :] = np.eye(k)
	b = np.concatenate([np.zeros(k), np.ones(k)])
	c = np.concatenate([np.zeros(2 * p), weights])

	solution = maximize(c, A, b)
	objective = solution.objective
	direction = solution.x[:p] - solution.x[p : 2 * p]
	slacks = solution.x[2 * p :]

	if objective <= ZERO_OBJECTIVE_TOL * max(1.0, total):
		logger.debug(f'No separation among {k} observation classes ({solution.iterations} pivots)')
		return SeparationDiagnosis(kind=SeparationKind.NONE, n_observations=round(total), objective=0.0)

	saturated = slacks > 1.0 - SATURATION_TOL
	kind = SeparationKind.COMPLETE if np.all(saturated) else SeparationKind.QUASI_COMPLETE
	scale = np.max(np.abs(direction))
	if scale > 0:
		direction = direction / scale
	n_separated = round(float(weights[saturated].sum()))
	logger.debug(f'{kind.value} separation: {n_separated} of {round(total)} observations strictly separated')
	return SeparationDiagnosis(
		kind=kind,
		direction=direction,
		n_observations=round(total),
		n_separated=n_separated,
		objective=objective,
	)
