"""Paired runs with one component of the method switched off."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

from oocpll.config import TrainConfig
from oocpll.data.types import LabeledExample, PartialDataset
from oocpll.exceptions import ConfigError
from oocpll.training.trainer import TrainingResult, run_training

logger = logging.getLogger(__name__)


class AblationSwitch(Enum):
    LD = "ld"
    RLD = "rld"
    RCG = "rcg"
    WCE = "wce"
    WARMUP = "warmup"
    DROP_CLOSED = "drop-closed"
    DROP_OPEN = "drop-open"

    @property
    def config_key(self) -> str:
        if self in (AblationSwitch.DROP_CLOSED, AblationSwitch.DROP_OPEN):
            return self.value.replace("-", "_")
        return f"disable_{self.value}"

    @classmethod
    def parse(cls, value: "str | AblationSwitch") -> "AblationSwitch":
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            choices = ", ".join(switch.value for switch in cls)
            raise ConfigError(f"ablate: unknown switch {value!r}, expected one of {choices}") from None


def apply_switch(config: TrainConfig, switch: "str | AblationSwitch") -> TrainConfig:
    """Config with exactly one ablation switch turned on."""
    switch = AblationSwitch.parse(switch)
    if config.ablation_switches:
        raise ConfigError(f"ablate: config already turns on {', '.join(config.ablation_switches)}")
    return config.with_updates(**{switch.config_key: True})


@dataclass(eq=False)
class AblationResult:
    switch: AblationSwitch
    full: TrainingResult
    ablated: TrainingResult

    @property
    def accuracy_gap(self) -> float:
        """Full-method final accuracy minus ablated final accuracy."""
        return self.full.final.test_accuracy - self.ablated.final.test_accuracy


def run_ablation(
    config: TrainConfig,
    dataset: PartialDataset,
    test: Sequence[LabeledExample],
    switch: "str | AblationSwitch | Sequence[str | AblationSwitch]",
    progress: bool = False,
) -> AblationResult:
    """Train the full method and the ablated variant under the same seed."""
    if not isinstance(switch, (str, AblationSwitch)):
        if len(switch) != 1:
            raise ConfigError(f"ablate: exactly one switch per run, got {len(switch)}")
        switch = switch[0]
    switch = AblationSwitch.parse(switch)
    ablated_config = apply_switch(config, switch)
    logger.info(f"Ablation {switch.value}: training full method")
    full = run_training(config, dataset, test, progress=progress)
    logger.info(f"Ablation {switch.value}: training with {switch.config_key}")
    ablated = run_training(ablated_config, dataset, test, progress=progress)
    result = AblationResult(switch, full, ablated)
    logger.info(f"Ablation {switch.value}: accuracy gap {result.accuracy_gap:+.4f}")
    return result
