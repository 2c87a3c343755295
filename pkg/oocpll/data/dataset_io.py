"""Reading and writing datasets and their corruption sidecars.

Dataset CSV: header `f0,...,f{d-1},label`, one example per row, label in [0, c) or -1 for out-of-space examples.
Features are written with 17 significant digits so a write/load round trip is bit-exact.

Corruption sidecar CSV: `index,truth_type,candidate_bits` with candidate_bits a c-character 0/1 string.
"""

import csv
import logging
from collections.abc import Sequence
from pathlib import Path

import numpy as np
import polars as pl

from oocpll.config import StorageConfig
from oocpll.data.generation import CorruptedSplits
from oocpll.data.types import OUT_OF_SPACE, CandidateMask, LabeledExample, PartialDataset, Source, TruthType, stack_examples
from oocpll.exceptions import (
    DatasetFileNotFoundError,
    InconsistentDimensionError,
    LabelOutOfRangeError,
    MalformedRowError,
)

logger = logging.getLogger(__name__)

LABEL_COLUMN = "label"


def _feature_columns(d: int) -> list[str]:
    return [f"f{j}" for j in range(d)]


def _format_features(features: np.ndarray) -> np.ndarray:
    return np.char.mod("%.17g", features)


def write_dataset_csv(path: Path, features: np.ndarray, labels: np.ndarray) -> None:
    features = np.asarray(features, dtype=np.float64)
    text = _format_features(features)
    columns = {name: text[:, j].tolist() for j, name in enumerate(_feature_columns(features.shape[1]))}
    columns[LABEL_COLUMN] = np.asarray(labels, dtype=np.int64).tolist()
    df = pl.DataFrame(columns, schema={**dict.fromkeys(columns, pl.String), LABEL_COLUMN: pl.Int64})
    df.write_csv(path)


def write_examples_csv(path: Path, examples: Sequence[LabeledExample], d: int) -> None:
    features, labels = stack_examples(examples, d=d)
    write_dataset_csv(path, features, labels)


def _read_header(path: Path, header: list[str] | None) -> int:
    if not header or header[-1] != LABEL_COLUMN:
        raise MalformedRowError(path, 1, f"header must end with '{LABEL_COLUMN}'")
    d = len(header) - 1
    if header[:-1] != _feature_columns(d):
        raise MalformedRowError(path, 1, f"feature columns must be named f0..f{d - 1}")
    return d


def load_dataset_csv(path: Path, n_classes: int | None = None, expected_dim: int | None = None) -> list[LabeledExample]:
    """Load one LabeledExample per data row, in file order.

    Rows are validated one by one so that errors can name the offending line.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetFileNotFoundError(f"Dataset file not found: {path}")

    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        d = _read_header(path, next(reader, None))
        if expected_dim is not None and d != expected_dim:
            raise InconsistentDimensionError(f"{path}: file has {d} features, expected {expected_dim}")

        examples = []
        for line_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 1:
                raise MalformedRowError(path, line_number, f"expected {d + 1} fields, got {len(row)}")
            try:
                features = np.array([float(value) for value in row[:-1]], dtype=np.float64)
                label = int(row[-1])
            except ValueError as exc:
                raise MalformedRowError(path, line_number, f"unparsable value ({exc})") from exc
            if not np.isfinite(features).all():
                raise MalformedRowError(path, line_number, "features must be finite")
            if label < OUT_OF_SPACE or (n_classes is not None and label >= n_classes):
                raise LabelOutOfRangeError(path, line_number, label, n_classes if n_classes is not None else 0)
            source = Source.AUXILIARY if label == OUT_OF_SPACE else Source.IN_DISTRIBUTION
            examples.append(LabeledExample(features, label, source))

    logger.debug(f"Loaded {len(examples)} examples from {path}")
    return examples


def write_corruption_sidecar(path: Path, dataset: PartialDataset) -> None:
    bits = np.where(dataset.masks, "1", "0")
    pl.DataFrame({
        "index": np.arange(dataset.n, dtype=np.int64),
        "truth_type": [TruthType(t).label for t in dataset.truth_type],
        "candidate_bits": ["".join(row) for row in bits],
    }).write_csv(path)


def read_corruption_sidecar(path: Path) -> pl.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise DatasetFileNotFoundError(f"Corruption sidecar not found: {path}")
    return pl.read_csv(path, schema={"index": pl.Int64, "truth_type": pl.String, "candidate_bits": pl.String})


def write_partial_dataset(directory: Path, splits: CorruptedSplits, storage: StorageConfig | None = None) -> None:
    """Write the training CSV, its corruption sidecar and the clean validation and test CSVs."""
    storage = storage or StorageConfig()
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    train = splits.train
    write_dataset_csv(directory / storage.train_csv, train.features, train.true_labels)
    write_corruption_sidecar(directory / storage.corruption_csv, train)
    write_examples_csv(directory / storage.validation_csv, splits.validation, d=train.d)
    write_examples_csv(directory / storage.test_csv, splits.test, d=train.d)
    logger.info(f"Wrote dataset with {train.n} training examples to {directory}")


def load_partial_dataset(directory: Path, n_classes: int, expected_dim: int | None = None, storage: StorageConfig | None = None) -> PartialDataset:
    """Rebuild the corrupted training set from its CSV and sidecar."""
    storage = storage or StorageConfig()
    directory = Path(directory)
    examples = load_dataset_csv(directory / storage.train_csv, n_classes=n_classes, expected_dim=expected_dim)
    sidecar = read_corruption_sidecar(directory / storage.corruption_csv)
    if len(sidecar) != len(examples):
        raise InconsistentDimensionError(f"Sidecar has {len(sidecar)} rows but the dataset has {len(examples)} examples")

    masks = np.array([CandidateMask.from_string(bits).bits for bits in sidecar["candidate_bits"]], dtype=bool)
    if masks.size and masks.shape[1] != n_classes:
        raise InconsistentDimensionError(f"Candidate masks have {masks.shape[1]} classes, config has {n_classes}")
    truth_type = np.array([TruthType[name.upper()] for name in sidecar["truth_type"]], dtype=np.int8)
    features, labels = stack_examples(examples, d=expected_dim)
    is_open = truth_type == TruthType.OPEN_SET
    if not np.array_equal(is_open, labels == OUT_OF_SPACE):
        raise InconsistentDimensionError("open_set tags in the sidecar disagree with out-of-space labels in the dataset")
    return PartialDataset(features=features, true_labels=labels, masks=masks.reshape(len(examples), n_classes), truth_type=truth_type, c=n_classes)


def load_examples(directory: Path, file_name: str, n_classes: int, expected_dim: int | None = None) -> list[LabeledExample]:
    return load_dataset_csv(Path(directory) / file_name, n_classes=n_classes, expected_dim=expected_dim)
