"""Batch objectives for the three partitions and their weighted sum."""

import numpy as np

from oocpll.model.mlp import PROB_FLOOR


def soft_cross_entropy(probs, targets, normalizer: int | None = None) -> float:
    """-(1/normalizer) * sum_i sum_j t_ij log f_j(x_i).

    The normalizer defaults to the number of rows; an empty batch contributes 0.
    """
    probs = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if probs.shape != targets.shape:
        raise ValueError(f"outputs {probs.shape} and targets {targets.shape} must have the same shape")
    if (targets < 0).any():
        raise ValueError("targets must be non-negative")
    normalizer = len(probs) if normalizer is None else normalizer
    if len(probs) == 0 or normalizer == 0:
        return 0.0
    return float(-(targets * np.log(np.maximum(probs, PROB_FLOOR))).sum() / normalizer)


def loss_normal(probs, confidences, normalizer: int | None = None) -> float:
    """Label-disambiguation loss: cross-entropy against the candidate confidences p."""
    return soft_cross_entropy(probs, confidences, normalizer)


def loss_closed(probs, reversed_confidences, normalizer: int | None = None) -> float:
    """Reversed label-disambiguation loss: cross-entropy against the non-candidate confidences p_bar."""
    return soft_cross_entropy(probs, reversed_confidences, normalizer)


def loss_open(probs, random_masks, normalizer: int | None = None) -> float:
    """Cross-entropy summed over the labels of each randomly generated candidate set."""
    random_masks = np.atleast_2d(np.asarray(random_masks, dtype=bool))
    if len(random_masks) and not random_masks.any(axis=1).all():
        raise ValueError("random candidate sets must not be empty")
    return soft_cross_entropy(probs, random_masks.astype(np.float64), normalizer)


def total_loss(l_normal: float, l_closed: float, l_open: float, alpha: float, beta: float) -> float:
    return l_normal + alpha * l_closed + beta * l_open
