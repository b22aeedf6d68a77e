"""
Configuration read lazily from environment variables

Values are looked up on every attribute access, so tests and long-running
processes see changes to os.environ immediately.
"""

import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

_PACKAGE_ROOT = Path(__file__).resolve().parent.parent


def _env_flag(name: str, default: str) -> bool:
	return os.getenv(name, default).strip().lower()[:1] in ('t', 'y', '1')


class Config:
	"""Lazily evaluated view over the BRLOGIT_* environment variables"""

	@property
	def BRLOGIT_LOGGING_LEVEL(self) -> str:
		return os.getenv('BRLOGIT_LOGGING_LEVEL', 'info').strip().lower()

	@property
	def BRLOGIT_SIMULATION_WORKERS(self) -> int:
		raw = os.getenv('BRLOGIT_SIMULATION_WORKERS', '1').strip()
		try:
			return max(1, int(raw))
		except ValueError:
			return 1

	@property
	def BRLOGIT_DATA_DIR(self) -> Path:
		raw = os.getenv('BRLOGIT_DATA_DIR', '').strip()
		if raw:
			return Path(raw).expanduser().resolve()
		return _PACKAGE_ROOT / 'tests' / 'data'

	@property
	def BRLOGIT_FORCE_COLOR(self) -> bool:
		return _env_flag('BRLOGIT_FORCE_COLOR', 'false')


CONFIG = Config()
