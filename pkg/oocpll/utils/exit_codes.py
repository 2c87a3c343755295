import logging
from collections.abc import Callable
from functools import wraps

import click

from oocpll.exceptions import (
    ConfigError,
    InconsistentDimensionError,
    InsufficientExamplesError,
    LabelOutOfRangeError,
    MalformedRowError,
    NonFiniteLossError,
    ProportionEstimationError,
)

logger = logging.getLogger(__name__)

OK = 0
USAGE = 2
IO_FAILURE = 3
NON_FINITE_LOSS = 4

_USAGE_ERRORS = (
    ConfigError,
    InconsistentDimensionError,
    LabelOutOfRangeError,
    MalformedRowError,
    InsufficientExamplesError,
    ProportionEstimationError,
)


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, NonFiniteLossError):
        return NON_FINITE_LOSS
    if isinstance(exc, _USAGE_ERRORS):
        return USAGE
    if isinstance(exc, OSError):
        return IO_FAILURE
    if isinstance(exc, ValueError):
        return USAGE
    raise exc


def returns_exit_code(fn: Callable[..., None]) -> Callable[..., int]:
    """Run `fn` and turn the errors it is expected to raise into a process exit status."""

    @wraps(fn)
    def wrapper(*args, **kwargs) -> int:
        try:
            fn(*args, **kwargs)
        except (OSError, ValueError, ArithmeticError, RuntimeError) as exc:
            code = exit_code_for(exc)
            logger.debug("Command failed", exc_info=exc)
            click.echo(f"Error: {exc}", err=True)
            return code
        return OK

    return wrapper
