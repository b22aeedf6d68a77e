"""
brlogit command line

    brlogit fit data.csv --response y --trials m --method dy
    brlogit detect data.csv --response y
    brlogit simulate scenario.yaml --out results/
    brlogit priors-grid data.csv --response y --covariates a,b --prior jeffreys --out grid.csv

Exit codes: 0 success, 1 invalid input, 2 statistical failure (separation or no convergence).
"""

import functools
import logging
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any, NoReturn

import click
import numpy as np
import pandas as pd
from rich.console import Console
from rich.markup import escape
from rich.table import Table

from brlogit import __version__
from brlogit.config import CONFIG
from brlogit.exceptions import BrlogitError, ConfigError, CsvFormatError, NonConvergenceError, SeparationError
from brlogit.logging_config import setup_logging
from brlogit.models import (
	BinomialDataset,
	CsvSchema,
	DYPrior,
	FitConfig,
	FitResult,
	Method,
	PriorKind,
	PriorSpec,
	SeparationDiagnosis,
	SeparationKind,
)
from brlogit.penalties import prior_grid
from brlogit.separation import detect_separation
from brlogit.simulation import load_scenario_config, run_scenario, write_report
from brlogit.solvers import fit, wald_interval, wald_test

logger = logging.getLogger(__name__)

EXIT_INPUT_ERROR = 1
EXIT_STATISTICAL_FAILURE = 2
INTERCEPT_NAME = '(Intercept)'


def _console(stderr: bool = False) -> Console:
	force = True if CONFIG.BRLOGIT_FORCE_COLOR else None
	stream = sys.stderr if stderr else sys.stdout
	width = None if stream.isatty() else 120
	return Console(stderr=stderr, force_terminal=force, width=width, highlight=False)


def _fail(message: str, code: int) -> NoReturn:
	_console(stderr=True).print(f'[bold red]error:[/bold red] {escape(message)}', markup=True)
	raise SystemExit(code)


def _handle_errors(command: Callable[..., Any]) -> Callable[..., Any]:
	"""Map brlogit errors onto exit codes"""

	@functools.wraps(command)
	def wrapper(*args, **kwargs):
		try:
			return command(*args, **kwargs)
		except SeparationError as e:
			_fail(str(e), EXIT_STATISTICAL_FAILURE)
		except NonConvergenceError as e:
			_fail(str(e), EXIT_STATISTICAL_FAILURE)
		except BrlogitError as e:
			_fail(str(e), EXIT_INPUT_ERROR)

	return wrapper


# --- CSV ingestion ---


def _split_columns(value: str | None) -> list[str]:
	if not value:
		return []
	return [name.strip() for name in value.split(',') if name.strip()]


def _numeric_column(frame: pd.DataFrame, column: str) -> np.ndarray:
	"""Parse one column as finite reals; the error names the first offending line"""
	raw = frame[column].str.strip()
	values = pd.to_numeric(raw, errors='coerce').to_numpy(dtype=np.float64)
	bad = ~np.isfinite(values)
	if np.any(bad):
		i = int(np.flatnonzero(bad)[0])
		# header is line 1
		raise CsvFormatError(f'expected a finite number, got {raw.iloc[i]!r}', line_number=i + 2, column=column)
	return values


def load_csv_dataset(path: str | Path, schema: CsvSchema) -> BinomialDataset:
	"""
	Read a headered, comma-separated UTF-8 file into a BinomialDataset

	Numbers use a decimal point regardless of locale; NaN and infinite values
	are rejected. Without covariate columns every remaining column is used.
	"""
	path = Path(path)
	try:
		frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8')
	except FileNotFoundError as e:
		raise CsvFormatError(f'file not found: {path}') from e
	except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
		raise CsvFormatError(f'cannot parse {path}: {e}') from e
	frame.columns = [str(c).strip() for c in frame.columns]
	if frame.empty:
		raise CsvFormatError(f'{path} has a header but no data rows')

	outcome = [schema.response_column] + ([schema.trials_column] if schema.trials_column else [])
	covariates = schema.covariate_columns or [c for c in frame.columns if c not in outcome]
	missing = [c for c in outcome + covariates if c not in frame.columns]
	if missing:
		raise CsvFormatError(f'missing columns: {", ".join(missing)} (available: {", ".join(frame.columns)})')

	columns = [_numeric_column(frame, c) for c in covariates]
	names = list(covariates)
	if schema.intercept:
		columns.insert(0, np.ones(len(frame)))
		names.insert(0, INTERCEPT_NAME)
	if not columns:
		raise CsvFormatError('the design has no columns')
	y = _numeric_column(frame, schema.response_column)
	m = _numeric_column(frame, schema.trials_column) if schema.trials_column else None
	data = BinomialDataset.from_arrays(np.column_stack(columns), y, m, names)
	logger.debug(f'Read {data.n} rows and {data.p} design columns from {path}')
	return data


def _schema(response: str, trials: str | None, covariates: str | None, no_intercept: bool) -> CsvSchema:
	try:
		return CsvSchema(
			response_column=response,
			trials_column=trials,
			covariate_columns=_split_columns(covariates),
			intercept=not no_intercept,
		)
	except ValueError as e:
		raise ConfigError(str(e)) from e


def schema_options(command: Callable[..., Any]) -> Callable[..., Any]:
	"""Options shared by every command that reads a CSV dataset"""
	options = [
		click.option('--response', '-y', required=True, help='Column with success counts (0/1 for binary data)'),
		click.option('--trials', '-m', default=None, help='Column with trial counts; omit for binary data'),
		click.option('--covariates', '-x', default=None, help='Comma-separated covariate columns (default: all others)'),
		click.option('--no-intercept', is_flag=True, default=False, help='Do not prepend a constant column'),
	]
	for option in reversed(options):
		command = option(command)
	return command


# --- rendering ---


def _fmt(value: float) -> str:
	return f'{value:.3f}' if np.isfinite(value) else str(value)


def _fit_table(result: FitResult, level: float) -> Table:
	table = Table(title=f'{result.method.value} estimates (n={result.n_obs}, trials={result.total_trials:g})')
	for header in ('coefficient', 'estimate', 'std. error', 'z', 'p-value', f'lower {level:.0%}', f'upper {level:.0%}'):
		table.add_column(header, justify='left' if header == 'coefficient' else 'right', no_wrap=True)
	intervals = wald_interval(result, level)
	z, p_values = wald_test(result)
	for j, name in enumerate(result.column_names):
		table.add_row(
			name,
			_fmt(result.beta[j]),
			_fmt(result.std_errors[j]),
			f'{z[j]:.2f}',
			f'{p_values[j]:.3g}',
			_fmt(intervals[j, 0]),
			_fmt(intervals[j, 1]),
		)
	return table


def _separation_message(diagnosis: SeparationDiagnosis, names: list[str]) -> str:
	message = f'{diagnosis.kind.value} separation ({diagnosis.n_separated} of {diagnosis.n_observations} observations separated)'
	if diagnosis.direction is not None:
		j = int(np.argmax(np.abs(diagnosis.direction)))
		message += f'; the separating direction is dominated by {names[j]!r} ({diagnosis.direction[j]:+.3f})'
	return message


def _direction_table(diagnosis: SeparationDiagnosis, names: list[str]) -> Table:
	table = Table(title='separating direction')
	table.add_column('coefficient')
	table.add_column('direction', justify='right')
	assert diagnosis.direction is not None
	for name, value in zip(names, diagnosis.direction):
		table.add_row(name, _fmt(value))
	return table


# --- commands ---


class BrlogitGroup(click.Group):
	"""Command group whose usage errors exit with the input-error code"""

	def invoke(self, ctx: click.Context) -> Any:
		try:
			return super().invoke(ctx)
		except click.UsageError as e:
			e.exit_code = EXIT_INPUT_ERROR
			raise


@click.group(cls=BrlogitGroup)
@click.version_option(__version__, prog_name='brlogit')
@click.option('--verbose', '-v', is_flag=True, default=False, help='Log solver iterations (DEBUG level)')
def brlogit(verbose: bool) -> None:
	"""Bias-reduced logistic regression"""
	setup_logging('debug' if verbose else None)


@brlogit.command('fit')
@click.argument('csv_path', type=click.Path(dir_okay=False))
@schema_options
@click.option('--method', type=click.Choice([m.value for m in Method]), default=Method.DY.value, show_default=True)
@click.option('--level', type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True), default=0.95, show_default=True)
@click.option('--max-iter', type=click.IntRange(min=1), default=100, show_default=True)
@click.option('--json', 'as_json', is_flag=True, default=False, help='Print the full fit result as JSON')
@_handle_errors
def fit_command(
	csv_path: str,
	response: str,
	trials: str | None,
	covariates: str | None,
	no_intercept: bool,
	method: str,
	level: float,
	max_iter: int,
	as_json: bool,
) -> None:
	"""Fit a logistic regression and print estimates with Wald intervals"""
	data = load_csv_dataset(csv_path, _schema(response, trials, covariates, no_intercept))
	result = fit(data, Method(method), FitConfig(max_iter=max_iter))

	if as_json:
		click.echo(result.model_dump_json(indent=2))
	if not result.converged:
		diagnosis = result.separation_flag
		if diagnosis is not None and diagnosis.kind != SeparationKind.NONE:
			_fail(f'maximum likelihood estimate does not exist: {_separation_message(diagnosis, data.names)}', EXIT_STATISTICAL_FAILURE)
		_fail(
			f'{method} fit did not converge after {result.iterations} iterations (|score| = {result.final_grad_norm:.3e})',
			EXIT_STATISTICAL_FAILURE,
		)
	if not as_json:
		_console().print(_fit_table(result, level))


@brlogit.command('detect')
@click.argument('csv_path', type=click.Path(dir_okay=False))
@schema_options
@click.option('--json', 'as_json', is_flag=True, default=False, help='Print the diagnosis as JSON')
@_handle_errors
def detect_command(csv_path: str, response: str, trials: str | None, covariates: str | None, no_intercept: bool, as_json: bool) -> None:
	"""Check the data for complete or quasi-complete separation"""
	data = load_csv_dataset(csv_path, _schema(response, trials, covariates, no_intercept))
	diagnosis = detect_separation(data)
	if as_json:
		click.echo(diagnosis.model_dump_json(indent=2))
		return
	console = _console()
	console.print(f'separation: {diagnosis.kind.value}')
	if diagnosis.kind != SeparationKind.NONE:
		console.print(_separation_message(diagnosis, data.names))
		console.print(_direction_table(diagnosis, data.names))


@brlogit.command('simulate')
@click.argument('config_path', type=click.Path(dir_okay=False))
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), required=True, help='Directory for report.csv and summary.json')
@click.option('--workers', type=click.IntRange(min=1), default=None, help='Worker threads (default: config or BRLOGIT_SIMULATION_WORKERS)')
@_handle_errors
def simulate_command(config_path: str, out_dir: str, workers: int | None) -> None:
	"""Run a Monte Carlo scenario and write its report"""
	config = load_scenario_config(config_path)
	report = run_scenario(config, workers)
	csv_path, json_path = write_report(report, out_dir)

	table = Table(title=f'{config.n_reps} replications, n={config.n}, p={config.p}')
	for header in ('method', 'mean |bias|', 'mean rmse', 'finite', 'failures', 'mean ms'):
		table.add_column(header, justify='left' if header == 'method' else 'right', no_wrap=True)
	for method in config.methods:
		rows = report.coefficient_rows(method)
		bias = np.array([abs(row.bias) for row in rows])
		rmse = np.array([row.rmse for row in rows])
		summary = report.method_summary(method)
		finite = np.isfinite(bias)
		table.add_row(
			method.value,
			_fmt(float(np.mean(bias[finite]))) if finite.any() else 'nan',
			_fmt(float(np.mean(rmse[finite]))) if finite.any() else 'nan',
			str(min(row.finite_count for row in rows)),
			str(summary.failures),
			f'{summary.mean_seconds * 1e3:.2f}',
		)
	console = _console()
	console.print(table)
	console.print(f'separated MLE replications: {report.separation_count}')
	console.print(f'wrote {csv_path} and {json_path}')


def _grid_prior(kind: PriorKind, data: BinomialDataset, tau: float | None, beta0: tuple[float, float] | None, cauchy_scale: float | None) -> PriorSpec:
	if kind == PriorKind.DY:
		if cauchy_scale is not None:
			raise ConfigError('--cauchy-scale only applies to --prior cauchy')
		if tau is None and beta0 is None:
			return PriorSpec.dy_default(data)
		prior = DYPrior(
			beta0=np.asarray(beta0 if beta0 is not None else (0.0, 0.0)),
			tau=tau if tau is not None else data.p / data.total_trials,
		)
		return PriorSpec.from_dy(prior)
	if tau is not None or beta0 is not None:
		raise ConfigError('--tau and --beta0 only apply to --prior dy')
	if kind == PriorKind.JEFFREYS:
		if cauchy_scale is not None:
			raise ConfigError('--cauchy-scale only applies to --prior cauchy')
		return PriorSpec.jeffreys()
	return PriorSpec.cauchy(cauchy_scale)


@brlogit.command('priors-grid')
@click.argument('csv_path', type=click.Path(dir_okay=False))
@schema_options
@click.option('--prior', 'prior_kind', type=click.Choice([k.value for k in PriorKind]), default=PriorKind.DY.value, show_default=True)
@click.option('--range', 'grid_range', type=(float, float), default=(-5.0, 5.0), show_default=True, help='Grid bounds for both coefficients')
@click.option('--resolution', type=click.IntRange(min=2), default=101, show_default=True)
@click.option('--tau', type=click.FloatRange(min=0.0, min_open=True), default=None, help='DY prior precision (default p/m)')
@click.option('--beta0', type=(float, float), default=None, help='DY prior mode (default 0 0)')
@click.option('--cauchy-scale', type=click.FloatRange(min=0.0, min_open=True), default=None, help='Cauchy scale (default 2.5)')
@click.option('--out', 'out_path', type=click.Path(dir_okay=False), required=True)
@_handle_errors
def priors_grid_command(
	csv_path: str,
	response: str,
	trials: str | None,
	covariates: str | None,
	no_intercept: bool,
	prior_kind: str,
	grid_range: tuple[float, float],
	resolution: int,
	tau: float | None,
	beta0: tuple[float, float] | None,
	cauchy_scale: float | None,
	out_path: str,
) -> None:
	"""Write a log-prior evaluated on a two-coefficient grid as beta1,beta2,logdensity"""
	data = load_csv_dataset(csv_path, _schema(response, trials, covariates, no_intercept))
	prior = _grid_prior(PriorKind(prior_kind), data, tau, beta0, cauchy_scale)
	try:
		grid = prior_grid(data, prior, bounds=grid_range, resolution=resolution)
	except ValueError as e:
		if isinstance(e, BrlogitError):
			raise
		raise ConfigError(str(e)) from e
	frame = pd.DataFrame(grid.to_rows(), columns=['beta1', 'beta2', 'logdensity'])
	Path(out_path).parent.mkdir(parents=True, exist_ok=True)
	frame.to_csv(out_path, index=False, float_format='%.17g', lineterminator='\n')
	_console().print(f'wrote {resolution}x{resolution} {prior.kind.value} grid to {out_path}')


def main() -> None:
	brlogit()


if __name__ == '__main__':
	main()
