"""Exceptions raised by oocpll."""


class OocPllError(Exception):
    """Base class for all oocpll errors."""


class ConfigError(OocPllError, ValueError):
    """A config file is missing or one of its keys fails validation."""


class DatasetFileNotFoundError(OocPllError, FileNotFoundError):
    """A dataset file does not exist."""


class MalformedRowError(OocPllError, ValueError):
    """A dataset file contains a row that does not match the CSV schema."""

    def __init__(self, path, line_number: int, reason: str):
        self.path = path
        self.line_number = line_number
        super().__init__(f"{path}: line {line_number}: {reason}")


class InconsistentDimensionError(OocPllError, ValueError):
    """Feature dimensions disagree between two sources."""


class LabelOutOfRangeError(OocPllError, ValueError):
    """A label lies outside [0, c) and is not the out-of-space sentinel."""

    def __init__(self, path, line_number: int, label: int, n_classes: int):
        self.path = path
        self.line_number = line_number
        self.label = label
        super().__init__(f"{path}: line {line_number}: label {label} outside [0, {n_classes}) and not -1")


class InsufficientExamplesError(OocPllError, ValueError):
    """Not enough examples are available to satisfy a requested corruption proportion."""


class NonFiniteLossError(OocPllError, ArithmeticError):
    """A training loss became NaN or infinite."""

    def __init__(self, epoch: int, partition: str, value: float):
        self.epoch = epoch
        self.partition = partition
        self.value = value
        super().__init__(f"Non-finite {partition} loss ({value}) at epoch {epoch}")


class ProportionEstimationError(OocPllError, RuntimeError):
    """Validation accuracy never stabilized while ramping the normal proportion."""
