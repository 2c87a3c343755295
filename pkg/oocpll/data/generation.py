"""Candidate-set generation and out-of-candidate corruption of partially-labeled datasets."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from oocpll.config import TrainConfig
from oocpll.data.blobs import synth_blobs
from oocpll.data.types import (
    OUT_OF_SPACE,
    CandidateMask,
    LabeledExample,
    PartialDataset,
    Source,
    TruthType,
    proportion_count,
    stack_examples,
)
from oocpll.exceptions import InconsistentDimensionError, InsufficientExamplesError

logger = logging.getLogger(__name__)


def _check_probability(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


def generate_candidates(true_label: int, q: float, c: int, rng: np.random.Generator) -> CandidateMask:
    """Flip every non-true label into the candidate set independently with probability q.

    The true label is always a candidate.
    """
    _check_probability("q", q)
    if c < 2:
        raise ValueError(f"c must be at least 2, got {c}")
    if not 0 <= true_label < c:
        raise ValueError(f"true_label {true_label} outside [0, {c})")
    bits = rng.random(c) < q
    bits[true_label] = True
    return CandidateMask(bits)


def generate_candidate_matrix(labels: np.ndarray, q: float, c: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorized `generate_candidates` for a whole label vector; returns an (n, c) boolean matrix."""
    _check_probability("q", q)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= c):
        raise ValueError(f"labels must lie in [0, {c})")
    bits = rng.random((len(labels), c)) < q
    bits[np.arange(len(labels)), labels] = True
    return bits


def make_partial(examples: Sequence[LabeledExample], q: float, c: int, rng: np.random.Generator) -> PartialDataset:
    """Give clean in-distribution examples q-flipped candidate sets, all tagged NORMAL."""
    if any(example.source is Source.AUXILIARY for example in examples):
        raise ValueError("make_partial expects in-distribution examples only")
    features, labels = stack_examples(examples)
    masks = generate_candidate_matrix(labels, q, c, rng)
    return PartialDataset(
        features=features,
        true_labels=labels,
        masks=masks,
        truth_type=np.full(len(labels), TruthType.NORMAL, dtype=np.int8),
        c=c,
    )


def inject_closedset(dataset: PartialDataset, tau1: float, rng: np.random.Generator) -> PartialDataset:
    """Turn floor(tau1 * n) in-distribution examples into closed-set OOC examples.

    Each selected example loses its true label from the candidate set and gains one uniformly drawn former
    non-candidate, so |Y| is unchanged. Examples whose candidate set is already full cannot be swapped and are
    never selected.
    """
    _check_probability("tau1", tau1)
    n_selected = proportion_count(tau1, dataset.n)
    if n_selected == 0:
        return dataset

    eligible = np.flatnonzero(
        (dataset.truth_type == TruthType.NORMAL) & (dataset.true_labels != OUT_OF_SPACE) & (~dataset.masks).any(axis=1)
    )
    if len(eligible) < n_selected:
        raise InsufficientExamplesError(
            f"Closed-set injection needs {n_selected} examples with a non-candidate label, only {len(eligible)} exist"
        )

    masks = dataset.masks.copy()
    truth_type = dataset.truth_type.copy()
    selected = np.sort(rng.choice(eligible, size=n_selected, replace=False))
    for index in selected:
        true_label = dataset.true_labels[index]
        swapped_in = int(rng.choice(np.flatnonzero(~masks[index])))
        masks[index, true_label] = False
        masks[index, swapped_in] = True
        truth_type[index] = TruthType.CLOSED_SET

    logger.info(f"Injected {n_selected} closed-set OOC examples into {dataset.n} examples")
    return dataset.replace(masks=masks, truth_type=truth_type)


def inject_openset(
    base: PartialDataset,
    aux: Sequence[LabeledExample],
    tau2: float,
    q: float,
    rng: np.random.Generator,
) -> PartialDataset:
    """Append floor(tau2 * n) auxiliary examples as open-set OOC examples.

    Each appended example gets a uniform pseudo-label in [0, c) and a candidate set from the same q-flipping
    generator, so candidate-set statistics match the in-distribution examples.
    """
    if tau2 < 0:
        raise ValueError(f"tau2 must be non-negative, got {tau2}")
    _check_probability("q", q)
    n_selected = proportion_count(tau2, base.n)
    if n_selected == 0:
        return base
    if len(aux) < n_selected:
        raise InsufficientExamplesError(f"Open-set injection needs {n_selected} auxiliary examples, got {len(aux)}")

    picked = [aux[i] for i in rng.choice(len(aux), size=n_selected, replace=False)]
    for example in picked:
        shape = np.shape(example.features)
        if shape != (base.d,):
            raise InconsistentDimensionError(f"Auxiliary example has feature shape {shape}, dataset has dimension {base.d}")
    aux_features, _ = stack_examples(picked)

    pseudo_labels = rng.integers(0, base.c, size=n_selected)
    aux_masks = generate_candidate_matrix(pseudo_labels, q, base.c, rng)

    logger.info(f"Injected {n_selected} open-set OOC examples; dataset grows from {base.n} to {base.n + n_selected}")
    return PartialDataset(
        features=np.vstack([base.features, aux_features]),
        true_labels=np.concatenate([base.true_labels, np.full(n_selected, OUT_OF_SPACE, dtype=np.int64)]),
        masks=np.vstack([base.masks, aux_masks]),
        truth_type=np.concatenate([base.truth_type, np.full(n_selected, TruthType.OPEN_SET, dtype=np.int8)]),
        c=base.c,
    )


@dataclass(frozen=True, eq=False)
class CorruptedSplits:
    train: PartialDataset
    validation: list[LabeledExample]
    test: list[LabeledExample]


def build_corrupted_splits(config: TrainConfig, rng: np.random.Generator) -> CorruptedSplits:
    """Run the whole generation protocol: blobs, q-flipped candidates, closed-set swap, open-set injection.

    Validation and test sets are clean draws from the same in-distribution clusters.
    """
    in_distribution, auxiliary = synth_blobs(
        c=config.n_classes,
        n_per_class=config.n_per_class,
        d=config.dim,
        separation=config.separation,
        open_classes=config.open_classes,
        rng=rng,
    )
    dataset = make_partial(in_distribution, config.q, config.n_classes, rng)
    dataset = inject_closedset(dataset, config.tau1, rng)
    dataset = inject_openset(dataset, auxiliary, config.tau2, config.q, rng)

    validation, _ = synth_blobs(config.n_classes, config.n_val_per_class, config.dim, config.separation, 0, rng)
    test, _ = synth_blobs(config.n_classes, config.n_test_per_class, config.dim, config.separation, 0, rng)
    logger.info(
        f"Built training set with {dataset.count(TruthType.NORMAL)} normal, {dataset.count(TruthType.CLOSED_SET)} "
        f"closed-set and {dataset.count(TruthType.OPEN_SET)} open-set examples"
    )
    return CorruptedSplits(train=dataset, validation=validation, test=test)
