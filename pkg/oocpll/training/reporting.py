import json
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import polars as pl

from oocpll.config import StorageConfig, TrainConfig
from oocpll.data.types import PartialDataset, TruthType
from oocpll.selection.partition import PartitionRole
from oocpll.training.metrics import EpochMetrics
from oocpll.training.trainer import LossSnapshot, SelectionRecord, TrainingResult

logger = logging.getLogger(__name__)

METRICS_SCHEMA = {
    "epoch": pl.Int64,
    "loss_normal": pl.Float64,
    "loss_closed": pl.Float64,
    "loss_open": pl.Float64,
    "loss_total": pl.Float64,
    "test_accuracy": pl.Float64,
    "precision_normal": pl.Float64,
    "precision_closed": pl.Float64,
    "precision_open": pl.Float64,
    "disambiguation_rate": pl.Float64,
    "confidence_delta": pl.Float64,
    "lr": pl.Float64,
    "n_normal": pl.Int64,
    "n_closed": pl.Int64,
    "n_open": pl.Int64,
}

SUMMARY_SCHEMA = {
    "axis": pl.String,
    "value": pl.String,
    "final_accuracy": pl.Float64,
    "precision_normal": pl.Float64,
    "precision_closed": pl.Float64,
    "precision_open": pl.Float64,
}

_ROLE_NAMES = {
    PartitionRole.NORMAL: "normal",
    PartitionRole.CLOSED_SET: "closed_set",
    PartitionRole.OPEN_SET: "open_set",
    PartitionRole.EXCLUDED: "excluded",
}


def metrics_frame(metrics: Sequence[EpochMetrics]) -> pl.DataFrame:
    return pl.DataFrame([row.to_row() for row in metrics], schema=METRICS_SCHEMA)


def confidence_frame(result: TrainingResult, dataset: PartialDataset) -> pl.DataFrame:
    """One row per training example: truth type, top label of the active confidence row and the row itself."""
    active = result.table.active(result.roles)
    columns = {
        "index": np.arange(dataset.n),
        "truth_type": [TruthType(int(kind)).label for kind in dataset.truth_type],
        "top_label": active.argmax(axis=1),
        "top_confidence": active.max(axis=1),
    }
    columns.update({f"c{j}": active[:, j] for j in range(dataset.c)})
    return pl.DataFrame(columns)


def histogram_frame(snapshots: Sequence[LossSnapshot], bins: int) -> pl.DataFrame:
    """Per-type histograms of every selection loss, with shared bin edges per (stage, criterion, side).

    Infinite values (no non-candidate labels) are left out.
    """
    rows = []
    for snapshot in snapshots:
        for criterion, (l, lbar) in (("wooden", snapshot.wooden), ("decoupled", snapshot.decoupled)):
            for side, values in (("candidate", l), ("non_candidate", lbar)):
                finite = np.isfinite(values)
                if not finite.any():
                    continue
                edges = np.histogram_bin_edges(values[finite], bins=bins)
                for kind in TruthType:
                    selected = values[finite & (snapshot.truth_type == kind)]
                    counts, _ = np.histogram(selected, bins=edges)
                    rows.extend(
                        {
                            "stage": snapshot.stage,
                            "truth_type": kind.label,
                            "criterion": criterion,
                            "side": side,
                            "bin_left": float(edges[i]),
                            "bin_right": float(edges[i + 1]),
                            "count": int(count),
                        }
                        for i, count in enumerate(counts)
                    )
    schema = {
        "stage": pl.String,
        "truth_type": pl.String,
        "criterion": pl.String,
        "side": pl.String,
        "bin_left": pl.Float64,
        "bin_right": pl.Float64,
        "count": pl.Int64,
    }
    return pl.DataFrame(rows, schema=schema)


def selection_frame(record: SelectionRecord, truth_type: np.ndarray) -> pl.DataFrame:
    return pl.DataFrame(
        {
            "index": np.arange(len(record.l)),
            "l_w": record.l,
            "lbar_w": record.lbar,
            "assigned": [_ROLE_NAMES[PartitionRole(int(role))] for role in record.roles],
            "truth": [TruthType(int(kind)).label for kind in truth_type],
        }
    )


def manifest(config: TrainConfig, extra: dict | None = None) -> dict:
    values = config.model_dump(mode="json")
    values["hidden_sizes"] = ",".join(str(size) for size in config.hidden_sizes)
    return {
        "config": values,
        "seeds": {"master": config.seed, "streams": ["data", "shuffle", "init", "candidates"]},
        "ablations": config.ablation_switches,
        **(extra or {}),
    }


def write_manifest(path: Path, config: TrainConfig, extra: dict | None = None) -> None:
    Path(path).write_text(json.dumps(manifest(config, extra), indent=2, sort_keys=True) + "\n")


@dataclass
class RunReporter:
    """Writes every artifact of one training run below `out_dir`.

    Attributes:
        out_dir: Directory owned by the run; created if missing.
        storage: Artifact file names.
    """

    out_dir: Path
    storage: StorageConfig = field(default_factory=StorageConfig)

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

    @property
    def checkpoint_path(self) -> Path:
        return self.out_dir / self.storage.checkpoint_npz

    def write_all(self, config: TrainConfig, result: TrainingResult, dataset: PartialDataset, extra: dict | None = None) -> None:
        metrics_path = self.out_dir / self.storage.metrics_csv
        metrics_frame(result.metrics).write_csv(metrics_path)
        write_manifest(self.out_dir / self.storage.manifest_json, config, extra)
        confidence_frame(result, dataset).write_csv(self.out_dir / self.storage.confidences_csv)
        histogram_frame(result.loss_snapshots, config.histogram_bins).write_csv(
            self.out_dir / self.storage.loss_histograms_csv
        )
        if result.selections:
            selection_dir = self.out_dir / self.storage.selection_dir
            selection_dir.mkdir(exist_ok=True)
            for record in result.selections:
                selection_frame(record, dataset.truth_type).write_csv(selection_dir / f"epoch_{record.epoch:03d}.csv")
        logger.info(f"Wrote metrics, manifest, confidences and loss histograms to {self.out_dir}")


def summary_row(axis: str, value: str, result: TrainingResult) -> dict:
    final = result.final
    return {
        "axis": axis,
        "value": value,
        "final_accuracy": final.test_accuracy,
        "precision_normal": final.precision_normal,
        "precision_closed": final.precision_closed,
        "precision_open": final.precision_open,
    }


def write_sweep_summary(path: Path, rows: Sequence[dict]) -> None:
    pl.DataFrame(list(rows), schema=SUMMARY_SCHEMA).write_csv(path)
    logger.info(f"Wrote sweep summary with {len(rows)} rows to {path}")
