"""
Dense tableau simplex for  maximize c'x  subject to  Ax <= b, x >= 0, b >= 0

With b >= 0 the slack basis is feasible, so no phase one is needed. Pivoting
follows Bland's rule (lowest eligible index enters, lowest basic index leaves
on ratio ties), which cannot cycle on the degenerate problems separation
checks produce.
"""

import logging

import numpy as np
from pydantic import BaseModel, ConfigDict

from brlogit.exceptions import DatasetValidationError, NonConvergenceError, UnboundedProblemError
from brlogit.models import FloatArray

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-9


class LinearProgramResult(BaseModel):
	model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

	x: FloatArray
	objective: float
	iterations: int


def _validate(c: np.ndarray, A: np.ndarray, b: np.ndarray) -> None:
	if A.ndim != 2:
		raise DatasetValidationError(f'A must be two-dimensional, got shape {A.shape}')
	rows, cols = A.shape
	if c.shape != (cols,) or b.shape != (rows,):
		raise DatasetValidationError(f'inconsistent shapes: c {c.shape}, A {A.shape}, b {b.shape}')
	if np.any(b < 0):
		raise DatasetValidationError('right-hand side b must be nonnegative')
	if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
		raise DatasetValidationError('linear program contains NaN or infinite coefficients')


def maximize(c, A, b, max_iterations: int | None = None) -> LinearProgramResult:
	"""
	Solve a standard-form LP with a feasible origin

	Args:
	    c: Objective coefficients (k,)
	    A: Constraint matrix (r x k)
	    b: Nonnegative right-hand side (r,)
	    max_iterations: Pivot limit; defaults to a generous multiple of the tableau size

	Returns:
	    LinearProgramResult with the optimal x and objective value

	Raises:
	    UnboundedProblemError: when the objective can grow without bound
	"""
	c = np.asarray(c, dtype=np.float64)
	A = np.asarray(A, dtype=np.float64)
	b = np.asarray(b, dtype=np.float64)
	_validate(c, A, b)
	rows, cols = A.shape
	limit = max_iterations if max_iterations is not None else 50 * (rows + cols) + 1000

	tableau = np.zeros((rows + 1, cols + rows + 1))
	tableau[:rows, :cols] = A
	tableau[:rows, cols : cols + rows] = np.eye(rows)
	tableau[:rows, -1] = b
	tableau[rows, :cols] = -c
	basis = np.arange(cols, cols + rows)

	iterations = 0
	while True:
		reduced = tableau[rows, :-1]
		eligible = np.flatnonzero(reduced < -PIVOT_TOL)
		if eligible.size == 0:
			break
		if iterations >= limit:
			raise NonConvergenceError(f'simplex did not terminate within {limit} pivots')
		entering = int(eligible[0])

		column = tableau[:rows, entering]
		candidates = np.flatnonzero(column > PIVOT_TOL)
		if candidates.size == 0:
			raise UnboundedProblemError(f'objective is unbounded along variable {entering}')
		ratios = tableau[candidates, -1] / column[candidates]
		best = ratios.min()
		tied = candidates[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
		leaving_row = int(tied[np.argmin(basis[tied])])

		pivot_row = tableau[leaving_row] / tableau[leaving_row, entering]
		tableau -= np.outer(tableau[:, entering], pivot_row)
		tableau[leaving_row] = pivot_row
		np.maximum(tableau[:rows, -1], 0.0, out=tableau[:rows, -1])
		basis[leaving_row] = entering
		iterations += 1

	solution = np.zeros(cols + rows)
	solution[basis] = tableau[:rows, -1]
	x = solution[:cols]
	logger.debug(f'Simplex finished after {iterations} pivots on a {rows}x{cols} problem')
	return LinearProgramResult(x=x, objective=float(c @ x), iterations=iterations)
