"""Per-example losses over the candidate and non-candidate parts of a prediction.

All functions accept either one probability vector with its mask, or an (n, c) matrix with an (n, c) mask,
and return floats or length-n arrays accordingly. Probabilities are floored at 1e-12 before every log.
An empty label subset yields +inf.
"""

import numpy as np
from scipy.special import entr

from oocpll.model.mlp import PROB_FLOOR

SUM_TOLERANCE = 1e-6


def _prepare(probs, mask) -> tuple[np.ndarray, np.ndarray, bool]:
    probs = np.asarray(probs, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if probs.shape != mask.shape or probs.ndim not in (1, 2):
        raise ValueError(f"probs {probs.shape} and mask {mask.shape} must have the same 1-D or 2-D shape")
    if not np.all(np.abs(probs.sum(axis=-1) - 1.0) <= SUM_TOLERANCE):
        raise ValueError("probability vectors must sum to 1 within 1e-6")
    if not mask.any(axis=-1).all():
        raise ValueError("every candidate set needs at least one label")
    return probs, mask, probs.ndim == 1


def _out(values: np.ndarray, single: bool):
    return float(values) if single else values


def _neg_log(probs: np.ndarray) -> np.ndarray:
    return -np.log(np.maximum(probs, PROB_FLOOR))


def decoupled_ce(probs, mask):
    """Mean binary CE item over the candidates (l_c) and over the non-candidates (l_bar_c).

    Non-candidates are scored as positives, weighted by the non-candidate indicator.
    """
    probs, mask, single = _prepare(probs, mask)
    items = _neg_log(probs)
    k = mask.sum(axis=-1)
    z = mask.shape[-1] - k
    l_c = np.where(mask, items, 0.0).sum(axis=-1) / k
    with np.errstate(divide="ignore", invalid="ignore"):
        l_bar = np.where(z > 0, np.where(~mask, items, 0.0).sum(axis=-1) / np.maximum(z, 1), np.inf)
    return _out(l_c, single), _out(l_bar, single)


def wooden_ce(probs, mask):
    """Smallest binary CE item over the candidates (l_w) and over the non-candidates (l_bar_w).

    Equivalently -log of the largest probability in each subset, so the value does not grow with the
    number of labels in the subset.
    """
    probs, mask, single = _prepare(probs, mask)
    items = _neg_log(probs)
    l_w = np.where(mask, items, np.inf).min(axis=-1)
    l_bar = np.where(~mask, items, np.inf).min(axis=-1)
    return _out(l_w, single), _out(l_bar, single)


def _masked_entropy(probs: np.ndarray, mask: np.ndarray) -> np.ndarray:
    masked = np.where(mask, np.maximum(probs, PROB_FLOOR), 0.0)
    mass = masked.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        renormalized = np.where(mass > 0, masked / np.where(mass > 0, mass, 1.0), 0.0)
    entropy = entr(renormalized).sum(axis=-1)
    return np.where(mask.any(axis=-1), entropy, np.inf)


def confidence_entropy(probs, mask):
    """Shannon entropy of the prediction restricted and renormalized to the candidates and the non-candidates.

    A diagnostic kept for comparison with the wooden loss; selection does not use it.
    """
    probs, mask, single = _prepare(probs, mask)
    return _out(_masked_entropy(probs, mask), single), _out(_masked_entropy(probs, ~mask), single)
