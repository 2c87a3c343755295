"""Rank-based partitioning of the training set into normal, closed-set and open-set pools.

Every example gets a pair of losses from the ensemble output: `l` over its candidate labels and `lbar`
over its non-candidate labels. Open-set examples fit neither side well (large `l + lbar`), closed-set
examples fit the non-candidates better than the candidates (large `l - lbar`).
"""

import logging
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Literal

import numpy as np

from oocpll.data.types import proportion_count
from oocpll.losses.partial_ce import decoupled_ce, wooden_ce
from oocpll.selection.ensemble import EnsembleState

logger = logging.getLogger(__name__)

Criterion = Literal["wooden", "decoupled"]
SelectionOrder = Literal["open_first", "closed_first"]


class PartitionRole(IntEnum):
    """Role assigned by selection. Values line up with `TruthType` so the two compare directly."""

    NORMAL = 0
    CLOSED_SET = 1
    OPEN_SET = 2
    EXCLUDED = -1


def empty_index() -> np.ndarray:
    return np.zeros(0, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class Partition:
    """Disjoint sorted index sets over range(n).

    `excluded_idx` is only non-empty for staged selections, where some examples sit out an epoch.
    """

    normal_idx: np.ndarray
    closed_idx: np.ndarray
    open_idx: np.ndarray
    gamma1: float
    gamma2: float
    n: int
    excluded_idx: np.ndarray = field(default_factory=empty_index)

    def __post_init__(self):
        parts = [self.normal_idx, self.closed_idx, self.open_idx, self.excluded_idx]
        merged = np.concatenate(parts)
        if len(merged) != self.n or not np.array_equal(np.sort(merged), np.arange(self.n)):
            raise ValueError("partition index sets must be disjoint and cover range(n)")

    @classmethod
    def all_normal(cls, n: int) -> "Partition":
        return cls(np.arange(n, dtype=np.int64), empty_index(), empty_index(), 0.0, 0.0, n)

    def roles(self) -> np.ndarray:
        """Per-example `PartitionRole` values as an int8 vector."""
        roles = np.full(self.n, PartitionRole.EXCLUDED, dtype=np.int8)
        roles[self.normal_idx] = PartitionRole.NORMAL
        roles[self.closed_idx] = PartitionRole.CLOSED_SET
        roles[self.open_idx] = PartitionRole.OPEN_SET
        return roles

    def sizes(self) -> dict[str, int]:
        return {"normal": len(self.normal_idx), "closed": len(self.closed_idx), "open": len(self.open_idx)}


def selection_losses(probs: np.ndarray, masks: np.ndarray, criterion: Criterion = "wooden") -> tuple[np.ndarray, np.ndarray]:
    """Per-example (l, lbar) under the wooden or the decoupled cross-entropy."""
    probs = np.asarray(probs, dtype=np.float64)
    masks = np.asarray(masks, dtype=bool)
    if probs.ndim != 2:
        raise ValueError(f"expected an (n, c) probability matrix, got shape {probs.shape}")
    if criterion == "wooden":
        return wooden_ce(probs, masks)
    if criterion == "decoupled":
        return decoupled_ce(probs, masks)
    raise ValueError(f"unknown selection criterion {criterion!r}")


def rank_top(scores: np.ndarray, pool: np.ndarray, m: int) -> np.ndarray:
    """The m indices of `pool` with the largest scores; ties go to the lower index. Returned sorted."""
    if m <= 0 or len(pool) == 0:
        return empty_index()
    pool_scores = scores[pool]
    order = np.lexsort((pool, -pool_scores))
    return np.sort(pool[order[:m]])


def ooc_scores(l: np.ndarray, lbar: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    l = np.asarray(l, dtype=np.float64)
    lbar = np.asarray(lbar, dtype=np.float64)
    if l.shape != lbar.shape or l.ndim != 1:
        raise ValueError("l and lbar must be vectors of equal length")
    if np.isnan(l).any() or np.isnan(lbar).any():
        raise ValueError("selection losses must not be NaN")
    # no non-candidates (lbar = inf): such an example ranks last for both OOC pools
    full = np.isinf(lbar)
    open_scores = np.where(full, -np.inf, l + lbar)
    closed_scores = np.where(full, -np.inf, l - lbar)
    return open_scores, closed_scores


def _check_proportions(gamma1: float, gamma2: float) -> None:
    if gamma1 < 0 or gamma2 < 0:
        raise ValueError(f"selection proportions must be non-negative, got gamma1={gamma1}, gamma2={gamma2}")
    if gamma1 + gamma2 >= 1:
        raise ValueError(f"gamma1 + gamma2 must be < 1, got {gamma1} + {gamma2}")


def partition_from_losses(
    l: np.ndarray,
    lbar: np.ndarray,
    gamma1: float,
    gamma2: float,
    order: SelectionOrder = "open_first",
) -> Partition:
    """Take floor(gamma2 * n) open-set examples by l + lbar and floor(gamma1 * n) closed-set examples by l - lbar.

    With `open_first` the closed pool is chosen from what the open pool left over, and vice versa.
    """
    _check_proportions(gamma1, gamma2)
    open_scores, closed_scores = ooc_scores(l, lbar)
    n = len(open_scores)
    n_closed, n_open = proportion_count(gamma1, n), proportion_count(gamma2, n)
    everyone = np.arange(n, dtype=np.int64)
    if order == "open_first":
        open_idx = rank_top(open_scores, everyone, n_open)
        closed_idx = rank_top(closed_scores, np.setdiff1d(everyone, open_idx), n_closed)
    elif order == "closed_first":
        closed_idx = rank_top(closed_scores, everyone, n_closed)
        open_idx = rank_top(open_scores, np.setdiff1d(everyone, closed_idx), n_open)
    else:
        raise ValueError(f"unknown selection order {order!r}")
    normal_idx = np.setdiff1d(everyone, np.concatenate([open_idx, closed_idx]))
    return Partition(normal_idx, closed_idx, open_idx, gamma1, gamma2, n)


def partition_ooc(
    ensemble: EnsembleState,
    masks: np.ndarray,
    gamma1: float,
    gamma2: float,
    criterion: Criterion = "wooden",
    order: SelectionOrder = "open_first",
) -> Partition:
    masks = np.asarray(masks, dtype=bool)
    if masks.shape != ensemble.mean.shape:
        raise ValueError(f"masks {masks.shape} do not match ensemble outputs {ensemble.mean.shape}")
    l, lbar = selection_losses(ensemble.mean, masks, criterion)
    partition = partition_from_losses(l, lbar, gamma1, gamma2, order)
    logger.debug(f"Partitioned {partition.n} examples with {criterion} losses: {partition.sizes()}")
    return partition
