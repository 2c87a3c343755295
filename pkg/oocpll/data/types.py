"""Domain types for partially-labeled datasets."""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np

OUT_OF_SPACE = -1


class Source(Enum):
    IN_DISTRIBUTION = "in_distribution"
    AUXILIARY = "auxiliary"


class TruthType(IntEnum):
    """Hidden corruption type of an example. Used for evaluation only."""

    NORMAL = 0
    CLOSED_SET = 1
    OPEN_SET = 2

    @property
    def label(self) -> str:
        return self.name.lower()


@dataclass(frozen=True, eq=False)
class LabeledExample:
    features: np.ndarray
    true_label: int
    source: Source = Source.IN_DISTRIBUTION

    def __post_init__(self):
        if (self.true_label == OUT_OF_SPACE) != (self.source is Source.AUXILIARY):
            raise ValueError(f"true_label {self.true_label} is inconsistent with source {self.source.value}")


@dataclass(frozen=True, eq=False)
class CandidateMask:
    """Candidate set Y as a boolean vector over the c classes; False entries form the non-candidate set."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        if bits.ndim != 1 or not bits.any():
            raise ValueError("a candidate mask must be a 1-D boolean vector with at least one candidate")
        object.__setattr__(self, "bits", bits)

    def __array__(self, dtype=None, copy=None):
        return self.bits if dtype is None else self.bits.astype(dtype)

    @property
    def c(self) -> int:
        return len(self.bits)

    @property
    def k(self) -> int:
        return int(self.bits.sum())

    @property
    def z(self) -> int:
        return self.c - self.k

    @property
    def candidates(self) -> set[int]:
        return set(np.flatnonzero(self.bits).tolist())

    @property
    def non_candidates(self) -> set[int]:
        return set(np.flatnonzero(~self.bits).tolist())

    def to_string(self) -> str:
        return "".join("1" if bit else "0" for bit in self.bits)

    @classmethod
    def from_string(cls, text: str) -> "CandidateMask":
        return cls(np.array([char == "1" for char in text], dtype=bool))

    @classmethod
    def from_labels(cls, labels: Sequence[int], c: int) -> "CandidateMask":
        bits = np.zeros(c, dtype=bool)
        bits[list(labels)] = True
        return cls(bits)


@dataclass(frozen=True, eq=False)
class PartialDataset:
    """A partially-labeled dataset stored column-wise.

    `true_labels` and `truth_type` are hidden ground truth and only feed evaluation.
    """

    features: np.ndarray
    true_labels: np.ndarray
    masks: np.ndarray
    truth_type: np.ndarray
    c: int
    sources: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        n = len(self.features)
        if self.features.ndim != 2:
            raise ValueError("features must be an (n, d) matrix")
        if not (len(self.true_labels) == len(self.masks) == len(self.truth_type) == n):
            raise ValueError("features, labels, masks and truth types must all have length n")
        if self.masks.shape != (n, self.c):
            raise ValueError(f"masks must have shape ({n}, {self.c}), got {self.masks.shape}")
        if self.sources is None:
            sources = [Source.AUXILIARY if label == OUT_OF_SPACE else Source.IN_DISTRIBUTION for label in self.true_labels]
            object.__setattr__(self, "sources", np.array(sources, dtype=object))

    @property
    def n(self) -> int:
        return len(self.features)

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def examples(self) -> list[LabeledExample]:
        return [
            LabeledExample(self.features[i], int(self.true_labels[i]), self.sources[i]) for i in range(self.n)
        ]

    def mask(self, index: int) -> CandidateMask:
        return CandidateMask(self.masks[index])

    def count(self, truth_type: TruthType) -> int:
        return int((self.truth_type == truth_type).sum())

    def replace(self, **changes) -> "PartialDataset":
        values = {
            "features": self.features,
            "true_labels": self.true_labels,
            "masks": self.masks,
            "truth_type": self.truth_type,
            "c": self.c,
            "sources": self.sources,
        }
        values.update(changes)
        return PartialDataset(**values)


def stack_examples(examples: Sequence[LabeledExample], d: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Stack examples into a feature matrix and a label vector."""
    if not examples:
        return np.zeros((0, d or 0)), np.zeros(0, dtype=np.int64)
    features = np.vstack([np.asarray(example.features, dtype=np.float64) for example in examples])
    labels = np.array([example.true_label for example in examples], dtype=np.int64)
    return features, labels


def proportion_count(fraction: float, n: int) -> int:
    """floor(fraction * n), robust to products like 0.29 * 100 landing just below an integer."""
    return math.floor(fraction * n + 1e-9)
