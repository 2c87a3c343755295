"""Checkpoint files.

A checkpoint is an uncompressed NumPy `.npz` archive holding:

- `format_version`: scalar int, currently 1
- `layer_sizes`: int vector (d, h1, ..., c) describing the architecture
- `weight_{i}` / `bias_{i}`: float64 parameter arrays of layer i, weight shaped (fan_in, fan_out)
"""

import logging
from pathlib import Path

import numpy as np

from oocpll.model.mlp import MlpParams

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def save_checkpoint(path: Path, params: MlpParams) -> None:
    arrays = {"format_version": np.array(FORMAT_VERSION), "layer_sizes": np.array(params.layer_sizes)}
    for i, (weight, bias) in enumerate(zip(params.weights, params.biases)):
        arrays[f"weight_{i}"] = weight
        arrays[f"bias_{i}"] = bias
    with Path(path).open("wb") as handle:
        np.savez(handle, **arrays)
    logger.info(f"Wrote checkpoint with layer sizes {params.layer_sizes} to {path}")


def load_checkpoint(path: Path) -> MlpParams:
    with np.load(Path(path)) as archive:
        version = int(archive["format_version"])
        if version != FORMAT_VERSION:
            raise ValueError(f"Unsupported checkpoint format version {version}")
        layer_sizes = tuple(int(size) for size in archive["layer_sizes"])
        n_layers = len(layer_sizes) - 1
        params = MlpParams(
            [archive[f"weight_{i}"] for i in range(n_layers)],
            [archive[f"bias_{i}"] for i in range(n_layers)],
        )
    if params.layer_sizes != layer_sizes:
        raise ValueError(f"Checkpoint declares layer sizes {layer_sizes} but holds {params.layer_sizes}")
    return params
