"""Per-epoch evaluation: losses, test accuracy, selection precision and confidence drift."""

from dataclasses import asdict, dataclass

import numpy as np
from sklearn.metrics import accuracy_score

from oocpll.data.types import PartialDataset, TruthType
from oocpll.disambiguation.confidence import ConfidenceTable
from oocpll.model.mlp import MlpParams, predict_labels
from oocpll.selection.partition import Partition


@dataclass(frozen=True)
class EpochLosses:
    normal: float = 0.0
    closed: float = 0.0
    open: float = 0.0
    total: float = 0.0


@dataclass(frozen=True)
class EpochMetrics:
    """One row of the metrics file. Precision fields are None during warm-up and for empty pools."""

    epoch: int
    loss_normal: float
    loss_closed: float
    loss_open: float
    loss_total: float
    test_accuracy: float
    precision_normal: float | None
    precision_closed: float | None
    precision_open: float | None
    disambiguation_rate: float
    confidence_delta: float
    lr: float
    n_normal: int
    n_closed: int
    n_open: int

    def to_row(self) -> dict:
        return asdict(self)


def selection_precision(partition: Partition | None, truth_type: np.ndarray) -> dict[str, float | None]:
    """|assigned to a pool and truly of that type| / |assigned to the pool|, per pool."""
    if partition is None:
        return {"normal": None, "closed": None, "open": None}
    truth_type = np.asarray(truth_type)
    pools = {
        "normal": (partition.normal_idx, TruthType.NORMAL),
        "closed": (partition.closed_idx, TruthType.CLOSED_SET),
        "open": (partition.open_idx, TruthType.OPEN_SET),
    }
    return {
        name: (float(np.mean(truth_type[idx] == kind)) if len(idx) else None) for name, (idx, kind) in pools.items()
    }


def confidence_delta(current: np.ndarray, previous: np.ndarray) -> float:
    """Frobenius norm of the change between two confidence matrices."""
    current = np.asarray(current, dtype=np.float64)
    previous = np.asarray(previous, dtype=np.float64)
    if current.shape != previous.shape:
        raise ValueError(f"confidence tables differ in shape: {current.shape} vs {previous.shape}")
    return float(np.linalg.norm(current - previous))


def disambiguation_rate(active: np.ndarray, dataset: PartialDataset) -> float:
    """Share of in-distribution training examples whose top confidence is their true label."""
    in_space = dataset.truth_type != TruthType.OPEN_SET
    if not in_space.any():
        return 0.0
    return float(np.mean(active[in_space].argmax(axis=1) == dataset.true_labels[in_space]))


def classification_accuracy(params: MlpParams, features: np.ndarray, labels: np.ndarray) -> float:
    return float(accuracy_score(labels, predict_labels(params, features)))


def eval_metrics(
    epoch: int,
    params: MlpParams,
    partition: Partition | None,
    table: ConfidenceTable,
    roles: np.ndarray | None,
    dataset: PartialDataset,
    test_features: np.ndarray,
    test_labels: np.ndarray,
    losses: EpochLosses,
    previous_active: np.ndarray,
    lr: float,
) -> EpochMetrics:
    active = table.active(roles)
    precision = selection_precision(partition, dataset.truth_type)
    sizes = partition.sizes() if partition is not None else {"normal": dataset.n, "closed": 0, "open": 0}
    return EpochMetrics(
        epoch=epoch,
        loss_normal=losses.normal,
        loss_closed=losses.closed,
        loss_open=losses.open,
        loss_total=losses.total,
        test_accuracy=classification_accuracy(params, test_features, test_labels),
        precision_normal=precision["normal"],
        precision_closed=precision["closed"],
        precision_open=precision["open"],
        disambiguation_rate=disambiguation_rate(active, dataset),
        confidence_delta=confidence_delta(active, previous_active),
        lr=lr,
        n_normal=sizes["normal"],
        n_closed=sizes["closed"],
        n_open=sizes["open"],
    )
