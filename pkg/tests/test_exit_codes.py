import pytest

from oocpll.exceptions import ConfigError, NonFiniteLossError, ProportionEstimationError
from oocpll.utils.exit_codes import IO_FAILURE, NON_FINITE_LOSS, OK, USAGE, exit_code_for, returns_exit_code


@pytest.mark.parametrize(
    ("exc", "expected"),
    [
        (ConfigError("bad key"), USAGE),
        (ProportionEstimationError("no drop"), USAGE),
        (NonFiniteLossError(0, "normal", float("nan")), NON_FINITE_LOSS),
        (FileNotFoundError("missing.csv"), IO_FAILURE),
        (ValueError("could not convert string to float: 'x'"), USAGE),
    ],
)
def test_exit_code_for(exc, expected):
    assert exit_code_for(exc) == expected


def test_exit_code_for_reraises_unexpected_errors():
    with pytest.raises(RuntimeError):
        exit_code_for(RuntimeError("boom"))


def test_returns_exit_code_turns_plain_value_error_into_usage(capsys):
    @returns_exit_code
    def command():
        raise ValueError("tau2 must be non-negative, got -1")

    assert command() == USAGE
    assert "tau2 must be non-negative" in capsys.readouterr().err


def test_returns_exit_code_success():
    assert returns_exit_code(lambda: None)() == OK
