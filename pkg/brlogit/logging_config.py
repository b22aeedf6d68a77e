import logging
import sys

from brlogit.config import CONFIG

RESULT_LEVEL = 35
_HANDLER_NAME = 'brlogit-stream'


def _add_result_level() -> None:
	"""Register the RESULT level (between WARNING and ERROR) used for run summaries"""
	if hasattr(logging, 'RESULT'):
		return
	logging.addLevelName(RESULT_LEVEL, 'RESULT')
	setattr(logging, 'RESULT', RESULT_LEVEL)

	def result(self: logging.Logger, message: object, *args, **kwargs) -> None:
		if self.isEnabledFor(RESULT_LEVEL):
			self._log(RESULT_LEVEL, message, args, **kwargs)

	setattr(logging.Logger, 'result', result)


def _resolve_level(name: str) -> int:
	if name == 'result':
		return RESULT_LEVEL
	level = logging.getLevelName(name.upper())
	return level if isinstance(level, int) else logging.INFO


def setup_logging(level: str | None = None, stream=None) -> logging.Logger:
	"""
	Configure the brlogit logger tree

	Args:
	    level: Level name; defaults to BRLOGIT_LOGGING_LEVEL
	    stream: Output stream; defaults to stderr

	Returns:
	    The root 'brlogit' logger
	"""
	_add_result_level()
	logger = logging.getLogger('brlogit')
	logger.setLevel(_resolve_level(level or CONFIG.BRLOGIT_LOGGING_LEVEL))
	logger.propagate = False

	for handler in list(logger.handlers):
		if handler.get_name() == _HANDLER_NAME:
			logger.removeHandler(handler)

	handler = logging.StreamHandler(stream or sys.stderr)
	handler.set_name(_HANDLER_NAME)
	handler.setFormatter(logging.Formatter('%(levelname)-8s [%(name)s] %(message)s'))
	logger.addHandler(handler)
	return logger
