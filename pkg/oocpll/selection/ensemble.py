"""Moving-average ensemble of per-example model outputs."""

from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np

ROW_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class EnsembleState:
    """Smoothed outputs `mean` (n x c) plus the warm-up outputs they were averaged from."""

    mean: np.ndarray
    eta: float = 0.9
    phi: int = 1
    history: tuple[np.ndarray, ...] = field(default=())

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if self.mean.ndim != 2:
            raise ValueError(f"ensemble outputs must be an (n, c) matrix, got shape {self.mean.shape}")
        if not np.all(np.abs(self.mean.sum(axis=1) - 1.0) <= ROW_TOLERANCE):
            raise ValueError("ensemble rows must sum to 1")

    @property
    def n(self) -> int:
        return len(self.mean)


def warmup_ensemble(history: Sequence[np.ndarray], eta: float = 0.9) -> EnsembleState:
    """Arithmetic mean of the last warm-up outputs, one (n, c) matrix per epoch."""
    if len(history) == 0:
        raise ValueError("cannot build an ensemble from an empty output history")
    stacked = np.stack([np.asarray(outputs, dtype=np.float64) for outputs in history])
    return EnsembleState(stacked.mean(axis=0), eta=eta, phi=len(history), history=tuple(stacked))


def moving_update(state: EnsembleState, current: np.ndarray) -> EnsembleState:
    """mean <- eta * mean + (1 - eta) * current."""
    current = np.asarray(current, dtype=np.float64)
    if current.shape != state.mean.shape:
        raise ValueError(f"current outputs {current.shape} do not match ensemble {state.mean.shape}")
    if state.eta == 1.0:
        return state
    if state.eta == 0.0:
        return replace(state, mean=current.copy())
    return replace(state, mean=state.eta * state.mean + (1.0 - state.eta) * current)
