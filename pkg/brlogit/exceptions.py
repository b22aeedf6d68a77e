"""
Error hierarchy for brlogit

Every error raised on purpose by the package derives from BrlogitError, so callers
(and the CLI) can separate statistical failures from programming errors.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
	from brlogit.models import SeparationDiagnosis


class BrlogitError(Exception):
	"""Base class for all brlogit errors"""


class DatasetValidationError(BrlogitError, ValueError):
	"""Dataset violates a shape, bound or finiteness requirement"""


class DimensionMismatchError(DatasetValidationError):
	"""Coefficient or hyperparameter vector does not match the design"""


class DegenerateResponseError(DatasetValidationError):
	"""All responses are failures or all are successes"""


class CsvFormatError(DatasetValidationError):
	"""CSV input could not be parsed"""

	def __init__(self, message: str, line_number: int | None = None, column: str | None = None):
		self.line_number = line_number
		self.column = column
		location = []
		if line_number is not None:
			location.append(f'line {line_number}')
		if column is not None:
			location.append(f'column {column!r}')
		prefix = f'{", ".join(location)}: ' if location else ''
		super().__init__(f'{prefix}{message}')


class RankDeficientError(BrlogitError, ArithmeticError):
	"""Design matrix (or a weighted information matrix) is not of full column rank"""

	def __init__(self, message: str, dependent_columns: list[str] | None = None):
		self.dependent_columns = dependent_columns or []
		if self.dependent_columns:
			message = f'{message} (dependent columns: {", ".join(self.dependent_columns)})'
		super().__init__(message)


class SeparationError(BrlogitError):
	"""A finite maximum likelihood estimate was required but the data are separated"""

	def __init__(self, message: str, diagnosis: SeparationDiagnosis | None = None):
		self.diagnosis = diagnosis
		super().__init__(message)


class NonConvergenceError(BrlogitError):
	"""Operation requires a converged fit"""


class UnboundedProblemError(BrlogitError):
	"""Linear program has no finite optimum"""


class ConfigError(BrlogitError, ValueError):
	"""Scenario or command configuration is invalid"""

	def __init__(self, message: str, fields: list[str] | None = None):
		self.fields = fields or []
		super().__init__(message)
