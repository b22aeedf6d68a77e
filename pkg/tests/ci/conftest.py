"""
Pytest configuration for brlogit CI tests.

Isolates the BRLOGIT_* environment per test and provides seeded generators and
random-dataset factories shared by the suites.
"""

import os
from collections.abc import Callable

import numpy as np
import pytest
from dotenv import load_dotenv

from brlogit import BinomialDataset
from brlogit.config import CONFIG

load_dotenv()

MANAGED_ENV_VARS = ('BRLOGIT_LOGGING_LEVEL', 'BRLOGIT_SIMULATION_WORKERS', 'BRLOGIT_FORCE_COLOR')


@pytest.fixture(autouse=True)
def setup_test_environment():
	"""
	Automatically set up test environment for all tests.
	"""
	original_env = {}
	test_env_vars = {
		'BRLOGIT_LOGGING_LEVEL': 'info',
		'BRLOGIT_SIMULATION_WORKERS': '1',
		'BRLOGIT_FORCE_COLOR': 'false',
	}

	for key, value in test_env_vars.items():
		original_env[key] = os.environ.get(key)
		os.environ[key] = value

	yield

	for key, value in original_env.items():
		if value is None:
			os.environ.pop(key, None)
		else:
			os.environ[key] = value


@pytest.fixture
def rng() -> np.random.Generator:
	return np.random.default_rng(20240611)


def random_design(rng: np.random.Generator, n: int, p: int, intercept: bool = True) -> np.ndarray:
	X = rng.normal(size=(n, p))
	if intercept:
		X[:, 0] = 1.0
	return X


def random_binomial_dataset(rng: np.random.Generator, n: int, p: int, max_trials: int = 5, scale: float = 0.5) -> BinomialDataset:
	"""Full-rank design with an intercept, integer trials in [1, max_trials] and binomial responses"""
	X = random_design(rng, n, p)
	m = rng.integers(1, max_trials + 1, size=n).astype(np.float64)
	beta = rng.normal(scale=scale, size=p)
	pi = 1.0 / (1.0 + np.exp(-X @ beta))
	y = rng.binomial(m.astype(np.int64), pi).astype(np.float64)
	return BinomialDataset.from_arrays(X, y, m)


def separated_binary_dataset(rng: np.random.Generator, n: int, p: int, quasi: bool = False) -> BinomialDataset:
	"""
	Binary data split by a sampled hyperplane through the design

	With quasi=True two observations with identical covariates and opposite
	responses are placed on the hyperplane itself.
	"""
	while True:
		X = random_design(rng, n, p)
		direction = rng.normal(size=p)
		eta = X @ direction
		y = (eta > 0).astype(np.float64)
		if quasi:
			on_plane = X[0].copy()
			# move row 0 onto the hyperplane by adjusting its last covariate
			on_plane[-1] -= (on_plane @ direction) / direction[-1]
			X[0] = on_plane
			X[1] = on_plane
			y[0], y[1] = 1.0, 0.0
		if 0 < y.sum() < n and np.linalg.matrix_rank(X) == p:
			return BinomialDataset.from_arrays(X, y)


@pytest.fixture
def make_dataset(rng) -> Callable[..., BinomialDataset]:
	return lambda n, p, **kwargs: random_binomial_dataset(rng, n, p, **kwargs)


@pytest.fixture
def separated_data() -> BinomialDataset:
	"""x = (-2, -1, 1, 2), y = (0, 0, 1, 1) with an intercept"""
	X = np.column_stack([np.ones(4), [-2.0, -1.0, 1.0, 2.0]])
	return BinomialDataset.from_arrays(X, [0.0, 0.0, 1.0, 1.0], column_names=['(Intercept)', 'x'])


@pytest.fixture
def endometrial_path():
	path = CONFIG.BRLOGIT_DATA_DIR / 'endometrial.csv'
	if not path.exists():
		pytest.skip(f'endometrial data not available at {path} (run bin/fetch_data.sh or set BRLOGIT_DATA_DIR)')
	return path
