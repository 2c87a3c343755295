"""Label confidences for ordinary and reversed disambiguation."""

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np

from oocpll.model.mlp import PROB_FLOOR
from oocpll.selection.partition import PartitionRole

logger = logging.getLogger(__name__)

NormMode = Literal["masked", "literal"]


def update_conf_normal(probs, mask, mode: NormMode = "masked") -> np.ndarray:
    """p_j proportional to f_j on the candidates and 0 elsewhere.

    `masked` renormalizes over the candidates so every row is a distribution; `literal` divides by the
    sum over all classes, which is 1 for softmax outputs. Works on one row or on an (n, c) matrix.
    """
    probs = np.asarray(probs, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if probs.shape != mask.shape or probs.ndim not in (1, 2):
        raise ValueError(f"probs {probs.shape} and mask {mask.shape} must have the same 1-D or 2-D shape")
    if not mask.any(axis=-1).all():
        raise ValueError("cannot disambiguate over an empty label set")
    if mode == "literal":
        return np.where(mask, probs / probs.sum(axis=-1, keepdims=True), 0.0)
    if mode != "masked":
        raise ValueError(f"unknown normalization mode {mode!r}")

    masked = np.where(mask, probs, 0.0)
    mass = masked.sum(axis=-1, keepdims=True)
    # softmax underflow can leave a masked set with no mass at all
    degenerate = mass <= 0.0
    if degenerate.any():
        masked = np.where(degenerate, np.where(mask, np.maximum(probs, PROB_FLOOR), 0.0), masked)
        mass = masked.sum(axis=-1, keepdims=True)
    rows = masked / mass
    full = mask.all(axis=-1, keepdims=True)
    return np.where(full, probs, rows)


def update_conf_reversed(probs, mask, mode: NormMode = "masked") -> np.ndarray:
    """p_bar_j proportional to f_j on the non-candidates and 0 on the candidates."""
    mask = np.asarray(mask, dtype=bool)
    if mask.all(axis=-1).any():
        raise ValueError("reversed disambiguation needs at least one non-candidate label")
    return update_conf_normal(probs, ~mask, mode)


def uniform_rows(mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    counts = mask.sum(axis=-1, keepdims=True)
    return np.where(mask, 1.0 / np.maximum(counts, 1), 0.0)


@dataclass(eq=False)
class ConfidenceTable:
    """Per-example confidences `p` over candidates and `pbar` over non-candidates.

    `pbar` rows stay zero while an example is on the ordinary path and are set uniform over the
    non-candidates the first time it is routed to reversed disambiguation.
    """

    p: np.ndarray
    pbar: np.ndarray
    masks: np.ndarray
    mode: NormMode = "masked"

    @classmethod
    def initialize(cls, masks: np.ndarray, mode: NormMode = "masked") -> "ConfidenceTable":
        masks = np.asarray(masks, dtype=bool)
        if masks.ndim != 2 or not masks.any(axis=1).all():
            raise ValueError("masks must be an (n, c) matrix with at least one candidate per row")
        return cls(uniform_rows(masks), np.zeros(masks.shape), masks.copy(), mode)

    @property
    def n(self) -> int:
        return len(self.masks)

    def route(self, roles: np.ndarray) -> np.ndarray:
        """Prepare rows for the roles of the coming epoch and return the roles actually used.

        A closed-set role on an example without non-candidates falls back to the normal role.
        """
        roles = np.asarray(roles, dtype=np.int8).copy()
        closed = roles == PartitionRole.CLOSED_SET
        full = self.masks.all(axis=1)
        stuck = closed & full
        if stuck.any():
            logger.warning(f"{int(stuck.sum())} closed-set examples have no non-candidate labels; treating them as normal")
            roles[stuck] = PartitionRole.NORMAL
            closed &= ~full
        entering = closed & ~self.pbar.any(axis=1)
        self.pbar[entering] = uniform_rows(~self.masks[entering])
        self.pbar[roles == PartitionRole.NORMAL] = 0.0
        return roles

    def update_normal(self, indices: np.ndarray, probs: np.ndarray) -> None:
        if len(indices):
            self.p[indices] = update_conf_normal(probs, self.masks[indices], self.mode)

    def update_reversed(self, indices: np.ndarray, probs: np.ndarray) -> None:
        if len(indices):
            self.pbar[indices] = update_conf_reversed(probs, self.masks[indices], self.mode)

    def active(self, roles: np.ndarray | None = None) -> np.ndarray:
        """The confidence rows in use: `pbar` for closed-set roles, `p` for everything else."""
        if roles is None:
            return self.p.copy()
        closed = (np.asarray(roles) == PartitionRole.CLOSED_SET)[:, None]
        return np.where(closed, self.pbar, self.p)

    def snapshot(self) -> "ConfidenceTable":
        return ConfidenceTable(self.p.copy(), self.pbar.copy(), self.masks, self.mode)
