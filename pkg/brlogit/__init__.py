"""
Bias-reduced logistic regression

Maximum likelihood, conjugate-prior (Diaconis-Ylvisaker) penalized likelihood,
Firth, Clogg and Cordeiro-McCullagh estimators for binomial regression, with
separation detection, Wald inference, prior grids and a Monte Carlo harness.
"""

__version__ = '0.1.0'

from .exceptions import (
	BrlogitError,
	ConfigError,
	CsvFormatError,
	DatasetValidationError,
	DegenerateResponseError,
	DimensionMismatchError,
	NonConvergenceError,
	RankDeficientError,
	SeparationError,
	UnboundedProblemError,
)
from .models import (
	BinomialDataset,
	CsvSchema,
	DesignKind,
	DYPrior,
	FitConfig,
	FitResult,
	Method,
	PriorKind,
	PriorSpec,
	ScenarioConfig,
	ScenarioReport,
	SeparationDiagnosis,
	SeparationKind,
)
from .separation import detect_separation
from .simulation import load_scenario_config, make_highdim_beta, run_scenario, simulate_dataset, write_report
from .solvers import (
	fit,
	fit_clogg,
	fit_cordeiro_mccullagh,
	fit_dy,
	fit_dy_general,
	fit_firth,
	fit_mle,
	wald_interval,
	wald_test,
)

__all__ = [
	'BinomialDataset',
	'BrlogitError',
	'ConfigError',
	'CsvFormatError',
	'CsvSchema',
	'DYPrior',
	'DatasetValidationError',
	'DegenerateResponseError',
	'DesignKind',
	'DimensionMismatchError',
	'FitConfig',
	'FitResult',
	'Method',
	'NonConvergenceError',
	'PriorKind',
	'PriorSpec',
	'RankDeficientError',
	'ScenarioConfig',
	'ScenarioReport',
	'SeparationDiagnosis',
	'SeparationError',
	'SeparationKind',
	'UnboundedProblemError',
	'detect_separation',
	'fit',
	'fit_clogg',
	'fit_cordeiro_mccullagh',
	'fit_dy',
	'fit_dy_general',
	'fit_firth',
	'fit_mle',
	'load_scenario_config',
	'make_highdim_beta',
	'run_scenario',
	'simulate_dataset',
	'wald_interval',
	'wald_test',
	'write_report',
]
