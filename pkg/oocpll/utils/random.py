from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RandomStreams:
    """Independent random generators fanned out from one master seed.

    Ablations built from the same seed therefore share data, shuffling order and initialization exactly.
    """

    seed: int
    data: np.random.Generator
    shuffle: np.random.Generator
    init: np.random.Generator
    candidates: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "RandomStreams":
        data, shuffle, init, candidates = np.random.SeedSequence(seed).spawn(4)
        return cls(
            seed=seed,
            data=np.random.default_rng(data),
            shuffle=np.random.default_rng(shuffle),
            init=np.random.default_rng(init),
            candidates=np.random.default_rng(candidates),
        )
