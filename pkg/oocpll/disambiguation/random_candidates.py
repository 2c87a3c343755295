"""Random candidate sets for examples selected as open-set OOC."""

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)


def gen_random_candidates(c: int, rho: float, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Each label enters independently with probability rho; an empty draw gets one uniformly random label.

    Returns a (c,) boolean mask, or (size, c) masks when `size` is given.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    if c < 1:
        raise ValueError(f"c must be positive, got {c}")
    rows = 1 if size is None else size
    masks = rng.random((rows, c)) < rho
    empty = np.flatnonzero(~masks.any(axis=1))
    if len(empty):
        masks[empty, rng.integers(0, c, size=len(empty))] = True
    return masks[0] if size is None else masks


@dataclass(eq=False)
class OpenSetAssignment:
    """Current random candidate masks of the examples in the open-set pool."""

    c: int
    rho: float = 0.5
    indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    masks: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.masks is None:
            self.masks = np.zeros((len(self.indices), self.c), dtype=bool)

    def regenerate(self, indices: np.ndarray, rng: np.random.Generator) -> None:
        """Draw fresh masks for `indices`, replacing the previous assignment."""
        self.indices = np.sort(np.asarray(indices, dtype=np.int64))
        self.masks = gen_random_candidates(self.c, self.rho, rng, size=len(self.indices))

    def lookup(self, indices: np.ndarray) -> np.ndarray:
        """Masks for a subset of the assigned examples, in the order given."""
        positions = np.searchsorted(self.indices, indices)
        if len(indices) and (
            positions.max(initial=0) >= len(self.indices) or not np.array_equal(self.indices[positions], indices)
        ):
            raise KeyError("some examples have no random candidate set")
        return self.masks[positions]
