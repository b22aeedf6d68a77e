"""
Data models for bias-reduced logistic regression
"""

from enum import Enum
from typing import Annotated, Any

import numpy as np
from pydantic import (
	BaseModel,
	ConfigDict,
	Field,
	PlainSerializer,
	PlainValidator,
	ValidationError,
	field_validator,
	model_validator,
)

from brlogit.exceptions import DatasetValidationError


def _to_float_array(value: Any) -> np.ndarray:
	try:
		array = np.array(value, dtype=np.float64, copy=True)
	except (TypeError, ValueError) as e:
		raise ValueError(f'expected a numeric array: {e}') from e
	array.setflags(write=False)
	return array


def _to_list(array: np.ndarray) -> list:
	return np.asarray(array, dtype=np.float64).tolist()


# Read-only float64 array that serializes to (nested) JSON lists
FloatArray = Annotated[np.ndarray, PlainValidator(_to_float_array), PlainSerializer(_to_list, return_type=list)]


class Method(str, Enum):
	"""Estimator used for a fit"""

	MLE = 'mle'
	DY = 'dy'
	FIRTH = 'firth'
	CLOGG = 'clogg'
	CORDEIRO_MCCULLAGH = 'cordeiro_mccullagh'


class SeparationKind(str, Enum):
	"""Outcome of the separation linear program"""

	NONE = 'none'
	QUASI_COMPLETE = 'quasi-complete'
	COMPLETE = 'complete'


class PriorKind(str, Enum):
	DY = 'dy'
	JEFFREYS = 'jeffreys'
	CAUCHY = 'cauchy'


class DesignKind(str, Enum):
	"""Covariate generation policy for Monte Carlo scenarios"""

	GAUSSIAN_SCALED = 'gaussian_scaled'  # iid Normal(0, 1/n)
	FIXED_MATRIX = 'fixed_matrix'  # user-supplied X reused every replication
	CORRELATED_GAUSSIAN = 'correlated_gaussian'  # exchangeable correlation rho, variance 1/n


class BinomialDataset(BaseModel):
	"""
	Binomial regression data: design X (n x p), responses y and trials m

	y and m are stored as reals so that pseudo-counts and fractional trial
	weights flow through the same code paths as genuine counts.
	"""

	model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

	X: FloatArray
	y: FloatArray
	m: FloatArray
	column_names: list[str] | None = None

	@model_validator(mode='after')
	def _check_shapes_and_bounds(self) -> 'BinomialDataset':
		if self.X.ndim != 2:
			raise ValueError(f'X must be two-dimensional, got shape {self.X.shape}')
		n, p = self.X.shape
		if n < 1 or p < 1:
			raise ValueError(f'X must have at least one row and one column, got shape {self.X.shape}')
		if self.y.shape != (n,):
			raise ValueError(f'y must have length {n}, got shape {self.y.shape}')
		if self.m.shape != (n,):
			raise ValueError(f'm must have length {n}, got shape {self.m.shape}')
		for name, array in (('X', self.X), ('y', self.y), ('m', self.m)):
			if not np.all(np.isfinite(array)):
				raise ValueError(f'{name} contains NaN or infinite values')
		if np.any(self.m <= 0):
			raise ValueError('trial counts m must be positive')
		if np.any(self.y < 0):
			raise ValueError('responses y must be nonnegative')
		if np.any(self.y > self.m * (1 + 1e-12) + 1e-12):
			raise ValueError('responses y must not exceed trial counts m')
		if self.column_names is not None and len(self.column_names) != p:
			raise ValueError(f'expected {p} column names, got {len(self.column_names)}')
		return self

	@classmethod
	def from_arrays(
		cls,
		X: Any,
		y: Any,
		m: Any | None = None,
		column_names: list[str] | None = None,
	) -> 'BinomialDataset':
		"""
		Build a dataset, raising DatasetValidationError on invalid input

		Args:
		    X: Design matrix (n x p); a 1-d input is treated as a single column
		    y: Success counts
		    m: Trial counts; defaults to one trial per row (binary data)
		    column_names: Optional labels for the p columns
		"""
		X_array = np.asarray(X, dtype=np.float64)
		if X_array.ndim == 1:
			X_array = X_array[:, np.newaxis]
		y_array = np.atleast_1d(np.asarray(y, dtype=np.float64))
		m_array = np.ones_like(y_array) if m is None else np.atleast_1d(np.asarray(m, dtype=np.float64))
		try:
			return cls(X=X_array, y=y_array, m=m_array, column_names=column_names)
		except ValidationError as e:
			raise DatasetValidationError(_first_error_message(e)) from e

	def with_responses(self, y: Any, m: Any | None = None) -> 'BinomialDataset':
		"""Same design and column names, new responses (and optionally new trials)"""
		return BinomialDataset.from_arrays(self.X, y, self.m if m is None else m, self.column_names)

	@property
	def n(self) -> int:
		return self.X.shape[0]

	@property
	def p(self) -> int:
		return self.X.shape[1]

	@property
	def total_trials(self) -> float:
		return float(np.sum(self.m))

	@property
	def names(self) -> list[str]:
		return list(self.column_names) if self.column_names else [f'x{j + 1}' for j in range(self.p)]

	def is_integer_valued(self, tol: float = 1e-9) -> bool:
		return bool(np.all(np.abs(self.y - np.round(self.y)) <= tol) and np.all(np.abs(self.m - np.round(self.m)) <= tol))


class ModelState(BaseModel):
	"""Fitted quantities at a coefficient vector: probabilities and IRLS weights"""

	model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

	beta: FloatArray
	pi: FloatArray
	W_diag: FloatArray


class DYPrior(BaseModel):
	"""Conjugate prior hyperparameters: prior mode beta0 and precision tau"""

	model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

	beta0: FloatArray
	tau: float = Field(gt=0.0)

	@field_validator('beta0')
	@classmethod
	def _check_beta0(cls, value: np.ndarray) -> np.ndarray:
		if value.ndim != 1 or not np.all(np.isfinite(value)):
			raise ValueError('beta0 must be a finite vector')
		return value


class PriorSpec(BaseModel):
	"""Which log-prior to evaluate, with the hyperparameters its kind needs"""

	model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

	kind: PriorKind
	dy: DYPrior | None = None
	cauchy_scales: FloatArray | None = None

	@model_validator(mode='after')
	def _check_fields_for_kind(self) -> 'PriorSpec':
		if self.kind == PriorKind.DY and self.dy is None:
			raise ValueError('a DY prior needs its hyperparameters (dy)')
		if self.kind != PriorKind.DY and self.dy is not None:
			raise ValueError(f'dy hyperparameters are only valid for kind=dy, got kind={self.kind.value}')
		if self.cauchy_scales is not None:
			if self.kind != PriorKind.CAUCHY:
				raise ValueError(f'cauchy_scales are only valid for kind=cauchy, got kind={self.kind.value}')
			if np.any(self.cauchy_scales <= 0):
				raise ValueError('cauchy_scales must be positive')
		return self

	@classmethod
	def jeffreys(cls) -> 'PriorSpec':
		return cls(kind=PriorKind.JEFFREYS)

	@classmethod
	def cauchy(cls, scales: Any | None = None) -> 'PriorSpec':
		return cls(kind=PriorKind.CAUCHY, cauchy_scales=scales)

	@classmethod
	def from_dy(cls, prior: DYPrior) -> 'PriorSpec':
		return cls(kind=PriorKind.DY, dy=prior)

	@classmethod
	def dy_default(cls, data: BinomialDataset) -> 'PriorSpec':
		"""DY prior with mode 0 and precision p/m for this dataset"""
		return cls.from_dy(DYPrior(beta0=np.zeros(data.p), tau=data.p / data.total_trials))


class FitConfig(BaseModel):
	"""Iteration controls shared by every solver"""

	model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

	max_iter: int = Field(default=100, gt=0)
	grad_tol: float = Field(default=1e-8, gt=0.0)
	step_halving_max: int = Field(default=20, ge=0)
	start: FloatArray | None = None
	# MLE checks for separation once |beta| or |x_i'beta| exceeds this bound before converging
	divergence_bound: float = Field(default=30.0, gt=0.0)


class SeparationDiagnosis(BaseModel):
	"""Result of the separation linear program"""

	model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

	kind: SeparationKind
	direction: FloatArray | None = None
	n_observations: int = 0
	n_separated: int = 0
	objective: float = 0.0


class FitResult(BaseModel):
	"""Estimates, inverse-information covariance and convergence diagnostics of one fit"""

	model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True, ser_json_inf_nan='constants')

	method: Method
	beta: FloatArray
	std_errors: FloatArray
	vcov: FloatArray
	converged: bool
	iterations: int
	final_grad_norm: float
	separation_flag: SeparationDiagnosis | None = None
	# conjugate prior behind a DY fit; None for the other methods
	prior: DYPrior | None = None
	loglik: float
	column_names: list[str]
	n_obs: int
	total_trials: float


class PriorGrid(BaseModel):
	"""Log-prior evaluated on a square grid, shifted so that its maximum is 0"""

	model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

	kind: PriorKind
	beta1: FloatArray
	beta2: FloatArray
	# logdensity[i, j] is evaluated at (beta1[i], beta2[j])
	logdensity: FloatArray

	def to_rows(self) -> list[tuple[float, float, float]]:
		return [
			(float(b1), float(b2), float(self.logdensity[i, j]))
			for i, b1 in enumerate(self.beta1)
			for j, b2 in enumerate(self.beta2)
		]


class ScenarioConfig(BaseModel):
	"""Monte Carlo scenario: data-generating design, truth and estimators to compare"""

	model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

	n: int = Field(gt=0)
	p: int = Field(gt=0)
	n_reps: int = Field(gt=0)
	seed: int = Field(ge=0, lt=2**64)
	true_beta: list[float]
	design: DesignKind = DesignKind.GAUSSIAN_SCALED
	rho: float = 0.0
	design_matrix: FloatArray | None = None
	trials: list[int] | None = None
	methods: list[Method] = Field(default_factory=lambda: list(Method))
	workers: int | None = Field(default=None, gt=0)

	@model_validator(mode='after')
	def _check_scenario(self) -> 'ScenarioConfig':
		if len(self.true_beta) != self.p:
			raise ValueError(f'true_beta has length {len(self.true_beta)}, expected p={self.p}')
		if not all(np.isfinite(self.true_beta)):
			raise ValueError('true_beta must be finite')
		if self.trials is not None:
			if len(self.trials) != self.n:
				raise ValueError(f'trials has length {len(self.trials)}, expected n={self.n}')
			if any(t <= 0 for t in self.trials):
				raise ValueError('trials must be positive')
		if not self.methods:
			raise ValueError('methods must name at least one estimator')
		if self.design == DesignKind.FIXED_MATRIX:
			if self.design_matrix is None:
				raise ValueError('design=fixed_matrix requires design_matrix')
			if self.design_matrix.shape != (self.n, self.p):
				raise ValueError(f'design_matrix has shape {self.design_matrix.shape}, expected ({self.n}, {self.p})')
		if self.design == DesignKind.CORRELATED_GAUSSIAN:
			lower = -1.0 / (self.p - 1) if self.p > 1 else -1.0
			if not lower < self.rho < 1.0:
				raise ValueError(f'rho must lie in ({lower:.4g}, 1) for an exchangeable correlation, got {self.rho}')
		return self

	@property
	def trial_counts(self) -> np.ndarray:
		if self.trials is None:
			return np.ones(self.n)
		return np.asarray(self.trials, dtype=np.float64)


class CoefficientSummary(BaseModel):
	model_config = ConfigDict(ser_json_inf_nan='constants')

	method: Method
	coefficient: int
	true_value: float
	bias: float
	rmse: float
	finite_count: int


class MethodSummary(BaseModel):
	"""Per-method timing and failure tallies over a scenario"""

	model_config = ConfigDict(ser_json_inf_nan='constants')

	method: Method
	mean_seconds: float
	median_seconds: float
	fits: int
	failures: int


class BlockSummary(BaseModel):
	"""Distribution of bias and rmse across a block of equal true coefficients"""

	model_config = ConfigDict(ser_json_inf_nan='constants')

	method: Method
	true_value: float
	first_coefficient: int
	size: int
	mean_abs_bias: float
	median_bias: float
	min_bias: float
	max_bias: float
	mean_rmse: float
	median_rmse: float
	min_rmse: float
	max_rmse: float


class ScenarioReport(BaseModel):
	"""Aggregated Monte Carlo results"""

	model_config = ConfigDict(ser_json_inf_nan='constants')

	n: int
	p: int
	n_reps: int
	seed: int
	coefficients: list[CoefficientSummary]
	methods: list[MethodSummary]
	separation_count: int
	block_summaries: list[BlockSummary] = []

	def coefficient_rows(self, method: Method) -> list[CoefficientSummary]:
		return [row for row in self.coefficients if row.method == method]

	def method_summary(self, method: Method) -> MethodSummary:
		return next(row for row in self.methods if row.method == method)


class CsvSchema(BaseModel):
	"""Mapping from CSV columns to a binomial regression design"""

	model_config = ConfigDict(frozen=True)

	response_column: str
	trials_column: str | None = None
	covariate_columns: list[str] = []
	intercept: bool = True

	@model_validator(mode='after')
	def _check_columns(self) -> 'CsvSchema':
		outcome = {self.response_column} | ({self.trials_column} if self.trials_column else set())
		overlap = outcome & set(self.covariate_columns)
		if overlap:
			raise ValueError(f'response/trials columns also listed as covariates: {", ".join(sorted(overlap))}')
		if self.trials_column == self.response_column:
			raise ValueError('response and trials columns must differ')
		if not self.covariate_columns and not self.intercept:
			raise ValueError('the design needs at least one covariate or an intercept')
		return self


def _first_error_message(error: ValidationError) -> str:
	details = error.errors()
	if not details:
		return str(error)
	first = details[0]
	location = '.'.join(str(part) for part in first.get('loc', ()))
	message = first.get('msg', str(error))
	return f'{location}: {message}' if location else message
