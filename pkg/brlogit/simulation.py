"""
Monte Carlo harness for comparing estimators

Every replication draws its design and responses from generators keyed by
(seed, replication, stream), so the report does not depend on the order or
the number of threads in which replications run.
"""

import json
import logging
import time
from pathlib import Path
from typing import Any

import anyio
import numpy as np
import pandas as pd
import yaml
from anyio import to_thread
from pydantic import BaseModel, ConfigDict, ValidationError
from scipy import linalg

from brlogit.config import CONFIG
from brlogit.exceptions import BrlogitError, ConfigError
from brlogit.model_core import sigmoid
from brlogit.models import (
	BinomialDataset,
	BlockSummary,
	CoefficientSummary,
	DesignKind,
	FloatArray,
	Method,
	MethodSummary,
	ScenarioConfig,
	ScenarioReport,
	SeparationKind,
)
from brlogit.solvers import fit

logger = logging.getLogger(__name__)

HIGHDIM_BLOCK_VALUES = (-3.0, -1.5, 0.0, 1.5, 3.0)
DESIGN_STREAM = 0
RESPONSE_STREAM = 1


class _MethodOutcome(BaseModel):
	model_config = ConfigDict(arbitrary_types_allowed=True)

	estimate: FloatArray | None = None
	seconds: float | None = None
	failed: bool = False
	separated: bool = False


class _Replication(BaseModel):
	index: int
	outcomes: dict[Method, _MethodOutcome]


def make_highdim_beta(p: int) -> np.ndarray:
	"""Five equal blocks with values -3, -1.5, 0, 1.5, 3 in that order"""
	if p <= 0 or p % 5 != 0:
		raise ConfigError(f'p must be a positive multiple of 5, got {p}', fields=['p'])
	return np.repeat(np.array(HIGHDIM_BLOCK_VALUES), p // 5)


def _generator(seed: int, rep_index: int, stream: int) -> np.random.Generator:
	return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, rep_index, stream])))


def _draw_design(config: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
	n, p = config.n, config.p
	if config.design == DesignKind.FIXED_MATRIX:
		assert config.design_matrix is not None
		return np.array(config.design_matrix)
	z = rng.standard_normal((n, p))
	if config.design == DesignKind.CORRELATED_GAUSSIAN:
		correlation = np.full((p, p), config.rho)
		np.fill_diagonal(correlation, 1.0)
		z = z @ linalg.cholesky(correlation, lower=True).T
	return z / np.sqrt(n)


def simulate_dataset(config: ScenarioConfig, rep_index: int) -> BinomialDataset:
	"""
	Draw replication rep_index of a scenario

	The result depends only on (config, rep_index): the design and the
	responses come from separate generators keyed on the seed and the index.
	"""
	if rep_index < 0:
		raise ValueError(f'rep_index must be nonnegative, got {rep_index}')
	X = _draw_design(config, _generator(config.seed, rep_index, DESIGN_STREAM))
	trials = config.trial_counts
	pi = sigmoid(X @ np.asarray(config.true_beta))
	y = _generator(config.seed, rep_index, RESPONSE_STREAM).binomial(trials.astype(np.int64), pi)
	return BinomialDataset.from_arrays(X, y.astype(np.float64), trials)


def _fit_once(data: BinomialDataset, method: Method, rep_index: int) -> _MethodOutcome:
	started = time.perf_counter()
	try:
		result = fit(data, method)
	except BrlogitError as e:
		logger.warning(f'Replication {rep_index}: {method.value} fit failed: {type(e).__name__}: {e}')
		return _MethodOutcome(failed=True)
	seconds = time.perf_counter() - started

	separated = result.separation_flag is not None and result.separation_flag.kind != SeparationKind.NONE
	if not result.converged or not np.all(np.isfinite(result.beta)):
		if not separated:
			logger.warning(f'Replication {rep_index}: {method.value} fit did not converge')
		return _MethodOutcome(seconds=seconds, failed=True, separated=separated)
	return _MethodOutcome(estimate=result.beta, seconds=seconds)


def _run_replication(config: ScenarioConfig, rep_index: int) -> _Replication:
	data = simulate_dataset(config, rep_index)
	outcomes = {method: _fit_once(data, method, rep_index) for method in config.methods}
	return _Replication(index=rep_index, outcomes=outcomes)


def _coefficient_summaries(method: Method, estimates: list[np.ndarray], truth: np.ndarray) -> list[CoefficientSummary]:
	rows = []
	stacked = np.array(estimates) if estimates else np.empty((0, truth.size))
	for r, true_value in enumerate(truth):
		errors = stacked[:, r] - true_value
		if errors.size:
			bias = float(np.mean(errors))
			rmse = float(np.sqrt(np.mean(errors**2)))
		else:
			bias = rmse = float('nan')
		rows.append(
			CoefficientSummary(
				method=method,
				coefficient=r,
				true_value=float(true_value),
				bias=bias,
				rmse=rmse,
				finite_count=int(errors.size),
			)
		)
	return rows


def _runs(values: np.ndarray) -> list[tuple[int, int]]:
	"""(start, length) of every maximal run of equal consecutive values"""
	runs = []
	start = 0
	for i in range(1, values.size + 1):
		if i == values.size or values[i] != values[start]:
			runs.append((start, i - start))
			start = i
	return runs


def _block_summaries(method: Method, rows: list[CoefficientSummary], truth: np.ndarray) -> list[BlockSummary]:
	blocks = [(start, length) for start, length in _runs(truth) if length >= 2]
	if len(blocks) < 2:
		return []
	summaries = []
	for start, length in blocks:
		block = rows[start : start + length]
		bias = np.array([row.bias for row in block])
		rmse = np.array([row.rmse for row in block])
		finite = np.isfinite(bias)
		if not np.any(finite):
			continue
		bias, rmse = bias[finite], rmse[finite]
		summaries.append(
			BlockSummary(
				method=method,
				true_value=float(truth[start]),
				first_coefficient=start,
				size=length,
				mean_abs_bias=float(np.mean(np.abs(bias))),
				median_bias=float(np.median(bias)),
				min_bias=float(np.min(bias)),
				max_bias=float(np.max(bias)),
				mean_rmse=float(np.mean(rmse)),
				median_rmse=float(np.median(rmse)),
				min_rmse=float(np.min(rmse)),
				max_rmse=float(np.max(rmse)),
			)
		)
	return summaries


def _aggregate(config: ScenarioConfig, replications: list[_Replication]) -> ScenarioReport:
	"""Merge per-replication outcomes in replication order"""
	truth = np.asarray(config.true_beta, dtype=np.float64)
	replications = sorted(replications, key=lambda rep: rep.index)
	coefficients: list[CoefficientSummary] = []
	methods: list[MethodSummary] = []
	blocks: list[BlockSummary] = []

	for method in config.methods:
		outcomes = [rep.outcomes[method] for rep in replications]
		estimates = [o.estimate for o in outcomes if o.estimate is not None]
		timings = np.array([o.seconds for o in outcomes if o.seconds is not None])
		rows = _coefficient_summaries(method, estimates, truth)
		coefficients.extend(rows)
		blocks.extend(_block_summaries(method, rows, truth))
		methods.append(
			MethodSummary(
				method=method,
				mean_seconds=float(np.mean(timings)) if timings.size else float('nan'),
				median_seconds=float(np.median(timings)) if timings.size else float('nan'),
				fits=len(outcomes),
				failures=sum(o.failed for o in outcomes),
			)
		)

	separation_count = sum(
		1 for rep in replications if Method.MLE in rep.outcomes and rep.outcomes[Method.MLE].separated
	)
	return ScenarioReport(
		n=config.n,
		p=config.p,
		n_reps=config.n_reps,
		seed=config.seed,
		coefficients=coefficients,
		methods=methods,
		separation_count=separation_count,
		block_summaries=blocks,
	)


def _worker_count(config: ScenarioConfig) -> int:
	return config.workers if config.workers is not None else CONFIG.BRLOGIT_SIMULATION_WORKERS


async def run_scenario_async(config: ScenarioConfig, workers: int | None = None) -> ScenarioReport:
	"""Run replications on up to `workers` threads; the report equals the sequential one"""
	workers = workers or _worker_count(config)
	limiter = anyio.CapacityLimiter(workers)
	replications: list[_Replication] = []

	async def run_one(rep_index: int) -> None:
		replications.append(await to_thread.run_sync(_run_replication, config, rep_index, limiter=limiter))

	async with anyio.create_task_group() as tg:
		for rep_index in range(config.n_reps):
			tg.start_soon(run_one, rep_index)
	return _aggregate(config, replications)


def run_scenario(config: ScenarioConfig, workers: int | None = None) -> ScenarioReport:
	"""
	Fit every requested method on n_reps simulated datasets

	Solver errors are tallied as per-method failures; they never abort the run.
	MLE replications that end in separation count towards separation_count and
	are left out of the MLE bias and rmse.
	"""
	workers = workers or _worker_count(config)
	logger.info(
		f'Running scenario n={config.n} p={config.p} reps={config.n_reps} '
		f'methods={",".join(m.value for m in config.methods)} workers={workers}'
	)
	started = time.perf_counter()
	if workers > 1:
		report = anyio.run(run_scenario_async, config, workers)
	else:
		report = _aggregate(config, [_run_replication(config, rep_index) for rep_index in range(config.n_reps)])
	logger.info(
		f'Scenario finished in {time.perf_counter() - started:.2f}s, '
		f'{report.separation_count} of {config.n_reps} replications separated'
	)
	return report


def _read_mapping(path: Path) -> dict[str, Any]:
	try:
		text = path.read_text(encoding='utf-8')
	except OSError as e:
		raise ConfigError(f'cannot read scenario config {path}: {e}') from e
	try:
		raw = json.loads(text) if path.suffix.lower() == '.json' else yaml.safe_load(text)
	except (json.JSONDecodeError, yaml.YAMLError) as e:
		raise ConfigError(f'cannot parse scenario config {path}: {e}') from e
	if not isinstance(raw, dict):
		raise ConfigError(f'scenario config {path} must contain a mapping of fields')
	return raw


def load_scenario_config(path: str | Path) -> ScenarioConfig:
	"""
	Read a YAML or JSON scenario file

	Besides the ScenarioConfig fields, a few conveniences are understood:
	`true_beta: blocks` expands to the five-block high-dimensional truth, a
	single integer `trials` applies to every observation, and
	`design_matrix_file` names a headered numeric CSV (relative paths resolve
	against the config file) used as the fixed design.
	"""
	path = Path(path)
	raw = _read_mapping(path)

	if raw.get('true_beta') == 'blocks':
		p = raw.get('p')
		if not isinstance(p, int):
			raise ConfigError('true_beta: blocks needs an integer p', fields=['p'])
		raw['true_beta'] = make_highdim_beta(p).tolist()
	if isinstance(raw.get('trials'), int) and isinstance(raw.get('n'), int):
		raw['trials'] = [raw['trials']] * raw['n']
	matrix_file = raw.pop('design_matrix_file', None)
	if matrix_file is not None:
		matrix_path = Path(matrix_file)
		if not matrix_path.is_absolute():
			matrix_path = path.parent / matrix_path
		try:
			raw['design_matrix'] = pd.read_csv(matrix_path).to_numpy(dtype=np.float64)
		except (OSError, ValueError) as e:
			raise ConfigError(f'cannot load design matrix {matrix_path}: {e}', fields=['design_matrix_file']) from e

	try:
		return ScenarioConfig.model_validate(raw)
	except ValidationError as e:
		fields = sorted({'.'.join(str(part) for part in err['loc']) or '<root>' for err in e.errors()})
		details = '; '.join(f'{".".join(str(part) for part in err["loc"]) or "<root>"}: {err["msg"]}' for err in e.errors())
		raise ConfigError(f'invalid scenario config {path}: {details}', fields=fields) from e


def write_report(report: ScenarioReport, out_dir: str | Path) -> tuple[Path, Path]:
	"""
	Write report.csv (long format, one row per method and coefficient) and summary.json

	Returns:
	    Paths of the CSV and the JSON summary
	"""
	out_dir = Path(out_dir)
	out_dir.mkdir(parents=True, exist_ok=True)
	csv_path = out_dir / 'report.csv'
	json_path = out_dir / 'summary.json'

	frame = pd.DataFrame(
		[row.model_dump(include={'method', 'coefficient', 'bias', 'rmse', 'finite_count'}) for row in report.coefficients],
		columns=['method', 'coefficient', 'bias', 'rmse', 'finite_count'],
	)
	frame['method'] = frame['method'].map(lambda m: Method(m).value)
	frame.to_csv(csv_path, index=False, float_format='%.17g', lineterminator='\n')
	json_path.write_text(report.model_dump_json(indent=2, exclude={'coefficients'}) + '\n', encoding='utf-8')
	logger.debug(f'Wrote {csv_path} and {json_path}')
	return csv_path, json_path
