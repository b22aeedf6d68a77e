"""
Reference values on the endometrial cancer data (79 patients, histology grade HG
against neovasculation NV, pulsatility index PI and endometrium height EH).

Needs tests/data/endometrial.csv (bin/fetch_data.sh) or BRLOGIT_DATA_DIR; skipped otherwise.
"""

import time

import numpy as np
import pytest
from click.testing import CliRunner

from brlogit import CsvSchema, SeparationKind, fit_clogg, fit_dy, fit_firth, fit_mle
from brlogit.cli import brlogit, load_csv_dataset

SCHEMA = CsvSchema(response_column='HG', covariate_columns=['NV', 'PI', 'EH'])

DY_ESTIMATES = [3.579, 3.431, -0.034, -2.458]
DY_STD_ERRORS = [1.459, 1.893, 0.040, 0.748]
FIRTH_ESTIMATES = [3.775, 2.929, -0.035, -2.604]
FIRTH_STD_ERRORS = [1.489, 1.551, 0.040, 0.776]
CLOGG_ESTIMATES = [3.622, 3.223, -0.034, -2.511]


@pytest.fixture
def endometrial(endometrial_path):
	return load_csv_dataset(endometrial_path, SCHEMA)


def test_dataset_shape(endometrial):
	assert endometrial.n == 79
	assert endometrial.names == ['(Intercept)', 'NV', 'PI', 'EH']


def test_reference_estimates(endometrial):
	started = time.perf_counter()
	dy, firth, clogg = fit_dy(endometrial), fit_firth(endometrial), fit_clogg(endometrial)
	assert time.perf_counter() - started < 1.0

	assert dy.converged and firth.converged and clogg.converged
	np.testing.assert_allclose(dy.beta, DY_ESTIMATES, atol=5e-3)
	np.testing.assert_allclose(dy.std_errors, DY_STD_ERRORS, atol=5e-3)
	np.testing.assert_allclose(firth.beta, FIRTH_ESTIMATES, atol=5e-3)
	np.testing.assert_allclose(firth.std_errors, FIRTH_STD_ERRORS, atol=5e-3)
	np.testing.assert_allclose(clogg.beta, CLOGG_ESTIMATES, atol=5e-3)


def test_mle_flags_quasi_separation_on_neovasculation(endometrial):
	mle = fit_mle(endometrial)
	assert not mle.converged
	assert mle.separation_flag is not None
	assert mle.separation_flag.kind == SeparationKind.QUASI_COMPLETE
	assert mle.separation_flag.direction is not None
	assert endometrial.names[int(np.argmax(np.abs(mle.separation_flag.direction)))] == 'NV'


def test_cli_detect_and_fit(endometrial_path):
	runner = CliRunner()
	detect = runner.invoke(brlogit, ['detect', str(endometrial_path), '-y', 'HG', '-x', 'NV,PI,EH'])
	assert detect.exit_code == 0, detect.output
	assert 'separation: quasi-complete' in detect.stdout

	mle = runner.invoke(brlogit, ['fit', str(endometrial_path), '-y', 'HG', '-x', 'NV,PI,EH', '--method', 'mle'])
	assert mle.exit_code == 2
	assert "'NV'" in mle.output

	dy = runner.invoke(brlogit, ['fit', str(endometrial_path), '-y', 'HG', '-x', 'NV,PI,EH'])
	assert dy.exit_code == 0, dy.output
	assert '3.579' in dy.stdout
