"""Estimating the selection proportions when the corruption rates are unknown.

Three linear ramps. Each step is scored by the training handle, which averages clean-validation accuracy
over a few epochs, and a stage stops once that score falls more than `epsilon` accuracy points below the
best seen in the stage:

1. the normal share grows from `normal_start` towards 1, with nothing selected as OOC;
2. with the normal share fixed, gamma1 grows from 0;
3. with both fixed, gamma2 grows from 0.

Examples not selected into any pool sit out the epoch.
"""

import logging
import math
from collections.abc import Callable, Iterator
from dataclasses import dataclass, field

import numpy as np

from oocpll.data.types import proportion_count
from oocpll.exceptions import ProportionEstimationError
from oocpll.selection.partition import Partition, empty_index, ooc_scores, rank_top

logger = logging.getLogger(__name__)

# evaluate(normal_fraction, gamma1, gamma2) -> validation accuracy in [0, 1]
Evaluate = Callable[[float, float, float], float]

_EPS = 1e-9


@dataclass(frozen=True)
class RampSchedule:
    """Linear ramp with increments of 1 / ramp_epochs."""

    normal_start: float = 0.5
    ramp_epochs: int = 50

    def __post_init__(self):
        if self.ramp_epochs < 1:
            raise ValueError("ramp_epochs must be at least 1")
        if not 0.0 <= self.normal_start <= 1.0:
            raise ValueError(f"normal_start must lie in [0, 1], got {self.normal_start}")

    @property
    def step(self) -> float:
        return 1.0 / self.ramp_epochs

    def values(self, start: float, stop: float) -> Iterator[float]:
        """start + step, start + 2 * step, ... clipped to and ending at `stop`."""
        k = 1
        while start + (k - 1) * self.step < stop - _EPS:
            yield min(start + k * self.step, stop)
            k += 1


@dataclass
class RampResult:
    normal_fraction: float
    gamma1: float
    gamma2: float
    # (stage, normal_fraction, gamma1, gamma2, accuracy) for every evaluation
    trace: list[tuple[str, float, float, float, float]] = field(default_factory=list)


def select_by_proportions(l: np.ndarray, lbar: np.ndarray, normal_fraction: float, gamma1: float, gamma2: float) -> Partition:
    """Staged selection: normal examples by lbar - l, then closed-set by l - lbar, then open-set by l + lbar.

    Each pool is taken from what the earlier ones left; the rest is excluded.
    """
    if min(normal_fraction, gamma1, gamma2) < 0 or normal_fraction + gamma1 + gamma2 > 1 + _EPS:
        raise ValueError(f"infeasible proportions: normal={normal_fraction}, gamma1={gamma1}, gamma2={gamma2}")
    open_scores, closed_scores = ooc_scores(l, lbar)
    n = len(open_scores)
    remaining = np.arange(n, dtype=np.int64)
    normal_idx = rank_top(-closed_scores, remaining, proportion_count(normal_fraction, n))
    remaining = np.setdiff1d(remaining, normal_idx)
    closed_idx = rank_top(closed_scores, remaining, proportion_count(gamma1, n))
    remaining = np.setdiff1d(remaining, closed_idx)
    open_idx = rank_top(open_scores, remaining, proportion_count(gamma2, n))
    excluded_idx = np.setdiff1d(remaining, open_idx) if len(remaining) else empty_index()
    return Partition(normal_idx, closed_idx, open_idx, gamma1, gamma2, n, excluded_idx)


def _checked(accuracy: float, stage: str, value: float) -> float:
    if not math.isfinite(accuracy):
        raise ProportionEstimationError(f"{stage}: validation accuracy is {accuracy} at {value:.3f}")
    return accuracy


def _ramp(stage: str, evaluate: Callable[[float], float], start: float, stop: float, start_accuracy: float, epsilon: float, schedule: RampSchedule, result: RampResult) -> tuple[float, bool]:
    """Advance one stage. Returns the last accepted value and whether the drop threshold was crossed."""
    best = start_accuracy
    accepted = start
    for value in schedule.values(start, stop):
        accuracy = _checked(evaluate(value), stage, value)
        result.trace.append((stage, *_point(stage, value, result), accuracy))
        if (best - accuracy) * 100.0 > epsilon:
            logger.info(f"{stage}: accuracy fell to {accuracy:.4f} (best {best:.4f}) at {value:.3f}; keeping {accepted:.3f}")
            return accepted, True
        best = max(best, accuracy)
        accepted = value
    return accepted, False


def _point(stage: str, value: float, result: RampResult) -> tuple[float, float, float]:
    if stage == "normal":
        return value, 0.0, 0.0
    if stage == "closed":
        return result.normal_fraction, value, 0.0
    return result.normal_fraction, result.gamma1, value


def run_ramp(evaluate: Evaluate, epsilon: float, schedule: RampSchedule | None = None) -> RampResult:
    """Run the three ramps and keep the full trace."""
    schedule = schedule or RampSchedule()
    if epsilon < 0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon}")
    result = RampResult(schedule.normal_start, 0.0, 0.0)

    start_accuracy = _checked(evaluate(schedule.normal_start, 0.0, 0.0), "normal", schedule.normal_start)
    result.trace.append(("normal", schedule.normal_start, 0.0, 0.0, start_accuracy))
    normal, crossed = _ramp(
        "normal", lambda v: evaluate(v, 0.0, 0.0), schedule.normal_start, 1.0, start_accuracy, epsilon, schedule, result
    )
    if crossed and normal == schedule.normal_start and schedule.normal_start < 1.0:
        raise ProportionEstimationError(
            f"validation accuracy dropped at the first increment above normal share {schedule.normal_start}; "
            "lower normal_start or raise epsilon"
        )
    result.normal_fraction = normal
    stage_accuracy = _last_accuracy(result, "normal", normal, start_accuracy)

    gamma1, _ = _ramp(
        "closed", lambda v: evaluate(normal, v, 0.0), 0.0, 1.0 - normal, stage_accuracy, epsilon, schedule, result
    )
    result.gamma1 = gamma1
    stage_accuracy = _last_accuracy(result, "closed", gamma1, stage_accuracy)

    gamma2, _ = _ramp(
        "open", lambda v: evaluate(normal, gamma1, v), 0.0, 1.0 - normal - gamma1, stage_accuracy, epsilon, schedule, result
    )
    result.gamma2 = gamma2
    logger.info(f"Estimated proportions: normal={normal:.3f}, gamma1={gamma1:.3f}, gamma2={gamma2:.3f}")
    return result


def _last_accuracy(result: RampResult, stage: str, accepted: float, fallback: float) -> float:
    """Accuracy recorded at the accepted value of a stage."""
    column = {"normal": 1, "closed": 2, "open": 3}[stage]
    for entry in reversed(result.trace):
        if entry[0] == stage and abs(entry[column] - accepted) < _EPS:
            return entry[4]
    return fallback


def estimate_proportions(evaluate: Evaluate, epsilon: float, schedule: RampSchedule | None = None) -> tuple[float, float]:
    """Estimate (gamma1, gamma2) by ramping the normal share, then gamma1, then gamma2."""
    result = run_ramp(evaluate, epsilon, schedule)
    return result.gamma1, result.gamma2
