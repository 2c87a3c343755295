"""The training loop: warm-up, ensemble-based selection, three-way disambiguation and SGD."""

import logging
from collections import deque
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from tqdm import tqdm

from oocpll.config import TrainConfig
from oocpll.data.types import LabeledExample, PartialDataset, TruthType, stack_examples
from oocpll.disambiguation.confidence import ConfidenceTable
from oocpll.disambiguation.random_candidates import OpenSetAssignment, gen_random_candidates
from oocpll.exceptions import ConfigError, InconsistentDimensionError, NonFiniteLossError
from oocpll.losses.objectives import loss_closed, loss_normal, loss_open, total_loss
from oocpll.model.checkpoint import save_checkpoint
from oocpll.model.mlp import MlpParams, backprop, forward, forward_with_cache, init_mlp
from oocpll.model.optimizer import OptimizerState, sgd_step
from oocpll.selection.ensemble import EnsembleState, moving_update, warmup_ensemble
from oocpll.selection.partition import Partition, PartitionRole, partition_ooc, selection_losses
from oocpll.selection.proportions import RampSchedule, run_ramp, select_by_proportions
from oocpll.training.metrics import EpochLosses, EpochMetrics, classification_accuracy, eval_metrics
from oocpll.utils.random import RandomStreams

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LossSnapshot:
    """Wooden and decoupled selection losses of every training example at one point of training."""

    stage: str
    truth_type: np.ndarray
    wooden: tuple[np.ndarray, np.ndarray]
    decoupled: tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True, eq=False)
class SelectionRecord:
    epoch: int
    l: np.ndarray
    lbar: np.ndarray
    roles: np.ndarray


@dataclass(eq=False)
class TrainingResult:
    metrics: list[EpochMetrics]
    params: MlpParams
    table: ConfidenceTable
    roles: np.ndarray
    partition: Partition | None
    loss_snapshots: list[LossSnapshot] = field(default_factory=list)
    selections: list[SelectionRecord] = field(default_factory=list)

    @property
    def final(self) -> EpochMetrics:
        return self.metrics[-1]


def check_consistency(config: TrainConfig, dataset: PartialDataset, test_features: np.ndarray) -> None:
    """Surface dataset/config mismatches before any training happens."""
    if dataset.c != config.n_classes:
        raise ConfigError(f"n_classes: config says {config.n_classes}, dataset has {dataset.c} classes")
    if dataset.d != config.dim:
        raise InconsistentDimensionError(f"dim: config says {config.dim}, dataset features have {dataset.d}")
    if test_features.ndim != 2 or test_features.shape[1] != dataset.d:
        raise InconsistentDimensionError(f"test features have shape {test_features.shape}, expected (*, {dataset.d})")
    if dataset.n == 0:
        raise ConfigError("training set is empty")


@dataclass(eq=False)
class Trainer:
    """Holds the mutable state of one run; `run()` goes through all T_max epochs."""

    config: TrainConfig
    dataset: PartialDataset
    test_features: np.ndarray
    test_labels: np.ndarray
    progress: bool = False

    def __post_init__(self):
        self.test_features = np.asarray(self.test_features, dtype=np.float64)
        self.test_labels = np.asarray(self.test_labels, dtype=np.int64)
        check_consistency(self.config, self.dataset, self.test_features)
        cfg = self.config
        self.streams = RandomStreams.from_seed(cfg.seed)
        self.params = init_mlp(cfg.layer_sizes, self.streams.init)
        self.optimizer = OptimizerState.for_params(self.params, cfg.base_lr, cfg.momentum, cfg.weight_decay, cfg.T_max)
        self.table = ConfidenceTable.initialize(self.dataset.masks, cfg.ld_norm)
        self.open_set = OpenSetAssignment(self.dataset.c, cfg.rho)
        self.history: deque[np.ndarray] = deque(maxlen=cfg.phi)
        self.ensemble: EnsembleState | None = None
        self.partition: Partition | None = None
        self.initial_outputs = self.predict_train()
        self.last_outputs = self.initial_outputs

    def predict_train(self) -> np.ndarray:
        return forward(self.params, self.dataset.features)

    # selection

    def select(self, epoch: int) -> np.ndarray:
        """Refresh the ensemble, partition the training set and return per-example roles for this epoch."""
        cfg = self.config
        if self.ensemble is None:
            outputs = list(self.history) or [self.initial_outputs]
            self.ensemble = warmup_ensemble(outputs, cfg.eta)
            logger.info(f"Warm-up ensemble built from {len(outputs)} epochs of outputs")
        else:
            self.ensemble = moving_update(self.ensemble, self.last_outputs)
        criterion = "decoupled" if cfg.disable_wce else "wooden"
        self.partition = partition_ooc(
            self.ensemble, self.dataset.masks, cfg.gamma1, cfg.gamma2, criterion, cfg.selection_order
        )
        logger.info(f"Epoch {epoch}: partition sizes {self.partition.sizes()}")
        return self.partition.roles()

    def assign_roles(self, roles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Split selection roles into training roles and the roles the confidence table tracks."""
        cfg = self.config
        table_roles = roles.copy()
        if cfg.disable_rld:
            table_roles[table_roles == PartitionRole.CLOSED_SET] = PartitionRole.NORMAL
        table_roles = self.table.route(table_roles)
        train_roles = roles.copy()
        if not cfg.disable_rld:
            # closed-set examples without non-candidates were moved to the normal path
            moved = (roles == PartitionRole.CLOSED_SET) & (table_roles == PartitionRole.NORMAL)
            train_roles[moved] = PartitionRole.NORMAL
        if cfg.drop_closed:
            train_roles[train_roles == PartitionRole.CLOSED_SET] = PartitionRole.EXCLUDED
        if cfg.drop_open:
            train_roles[train_roles == PartitionRole.OPEN_SET] = PartitionRole.EXCLUDED
        return train_roles, table_roles

    # optimization

    def _normalizers(self, n_batch: int, counts: tuple[int, int, int]) -> tuple[int, int, int]:
        if self.config.loss_norm == "batch":
            return n_batch, n_batch, n_batch
        return counts

    def _open_targets(self, indices: np.ndarray) -> np.ndarray:
        cfg = self.config
        if cfg.disable_rcg:
            return self.dataset.masks[indices]
        if cfg.rcg_cadence == "batch":
            return gen_random_candidates(self.dataset.c, cfg.rho, self.streams.candidates, size=len(indices))
        return self.open_set.lookup(indices)

    def train_epoch(self, epoch: int, train_roles: np.ndarray) -> EpochLosses:
        """One pass over the shuffled training set; confidences are refreshed right after each SGD step."""
        cfg = self.config
        features = self.dataset.features
        closed_rows = self.table.p if cfg.disable_rld else self.table.pbar
        optimizer = self.optimizer.at_epoch(epoch)
        order = self.streams.shuffle.permutation(self.dataset.n)
        components = []

        for start in range(0, len(order), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            batch = batch[train_roles[batch] != PartitionRole.EXCLUDED]
            if len(batch) == 0:
                continue
            roles = train_roles[batch]
            normal, closed, opened = (batch[roles == role] for role in (PartitionRole.NORMAL, PartitionRole.CLOSED_SET, PartitionRole.OPEN_SET))
            norm_n, norm_c, norm_o = self._normalizers(len(batch), (len(normal), len(closed), len(opened)))

            cache = forward_with_cache(self.params, features[batch])
            probs = cache.probs
            is_normal = roles == PartitionRole.NORMAL
            is_closed = roles == PartitionRole.CLOSED_SET
            is_open = roles == PartitionRole.OPEN_SET
            normal_targets = self.table.p[normal]
            closed_targets = closed_rows[closed]
            open_targets = self._open_targets(opened).astype(np.float64)

            values = {
                "normal": loss_normal(probs[is_normal], normal_targets, norm_n),
                "closed": loss_closed(probs[is_closed], closed_targets, norm_c),
                "open": loss_open(probs[is_open], open_targets, norm_o),
            }
            for name, value in values.items():
                if not np.isfinite(value):
                    raise NonFiniteLossError(epoch, name, value)
            components.append((values["normal"], values["closed"], values["open"]))

            targets = np.zeros_like(probs)
            if len(normal):
                targets[is_normal] = normal_targets / norm_n
            if len(closed):
                targets[is_closed] = cfg.alpha * closed_targets / norm_c
            if len(opened):
                targets[is_open] = cfg.beta * open_targets / norm_o
            grads = backprop(self.params, cache, targets)
            self.params, optimizer = sgd_step(self.params, grads, optimizer)

            if not cfg.disable_ld:
                updated = forward(self.params, features[batch])
                self.table.update_normal(normal, updated[is_normal])
                if cfg.disable_rld:
                    self.table.update_normal(closed, updated[is_closed])
                else:
                    self.table.update_reversed(closed, updated[is_closed])

        self.optimizer = optimizer
        means = np.mean(components, axis=0) if components else np.zeros(3)
        l_n, l_c, l_o = (float(value) for value in means)
        return EpochLosses(l_n, l_c, l_o, total_loss(l_n, l_c, l_o, cfg.alpha, cfg.beta))

    # loop

    def loss_snapshot(self, stage: str, outputs: np.ndarray) -> LossSnapshot:
        masks = self.dataset.masks
        return LossSnapshot(
            stage=stage,
            truth_type=self.dataset.truth_type.copy(),
            wooden=selection_losses(outputs, masks, "wooden"),
            decoupled=selection_losses(outputs, masks, "decoupled"),
        )

    def run(self, checkpoint_path: Path | None = None) -> TrainingResult:
        cfg = self.config
        all_normal = np.full(self.dataset.n, PartitionRole.NORMAL, dtype=np.int8)
        train_roles, table_roles = all_normal, all_normal
        previous_active = self.table.active(table_roles)
        metrics: list[EpochMetrics] = []
        snapshots: list[LossSnapshot] = []
        selections: list[SelectionRecord] = []

        epochs = tqdm(range(cfg.T_max), desc="Training", disable=not self.progress)
        for epoch in epochs:
            if epoch >= cfg.T_warmup:
                selected = self.select(epoch)
                train_roles, table_roles = self.assign_roles(selected)
                if not cfg.disable_rcg and cfg.rcg_cadence == "epoch":
                    self.open_set.regenerate(self.partition.open_idx, self.streams.candidates)
                if cfg.dump_selection:
                    criterion = "decoupled" if cfg.disable_wce else "wooden"
                    l, lbar = selection_losses(self.ensemble.mean, self.dataset.masks, criterion)
                    selections.append(SelectionRecord(epoch, l, lbar, selected))

            lr = self.optimizer.at_epoch(epoch).lr
            losses = self.train_epoch(epoch, train_roles)
            self.last_outputs = self.predict_train()
            if epoch < cfg.T_warmup:
                self.history.append(self.last_outputs)
            if epoch == cfg.T_warmup - 1:
                snapshots.append(self.loss_snapshot("warmup", self.last_outputs))

            row = eval_metrics(
                epoch,
                self.params,
                self.partition if epoch >= cfg.T_warmup else None,
                self.table,
                table_roles,
                self.dataset,
                self.test_features,
                self.test_labels,
                losses,
                previous_active,
                lr,
            )
            previous_active = self.table.active(table_roles)
            metrics.append(row)
            epochs.set_postfix(loss=f"{losses.total:.4f}", acc=f"{row.test_accuracy:.4f}")

        snapshots.append(self.loss_snapshot("final", self.last_outputs))
        logger.info(f"Finished {cfg.T_max} epochs, final test accuracy {metrics[-1].test_accuracy:.4f}")
        if checkpoint_path is not None:
            save_checkpoint(checkpoint_path, self.params)
        return TrainingResult(metrics, self.params, self.table, table_roles, self.partition, snapshots, selections)


def as_arrays(test: Sequence[LabeledExample] | tuple[np.ndarray, np.ndarray], d: int) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(test, tuple):
        return np.asarray(test[0], dtype=np.float64), np.asarray(test[1], dtype=np.int64)
    return stack_examples(test, d)


def run_training(
    config: TrainConfig,
    dataset: PartialDataset,
    test: Sequence[LabeledExample] | tuple[np.ndarray, np.ndarray],
    checkpoint_path: Path | None = None,
    progress: bool = False,
) -> TrainingResult:
    """Train on a corrupted partially-labeled dataset and evaluate on a clean test set every epoch."""
    features, labels = as_arrays(test, dataset.d)
    return Trainer(config, dataset, features, labels, progress=progress).run(checkpoint_path)


class RampEvaluator:
    """Training handle for proportion estimation.

    Warms a model up once with ordinary disambiguation on every example. Each call then trains
    `ramp_step_epochs` more epochs on the staged selection for the requested proportions and reports the
    mean clean-validation accuracy over those epochs.
    """

    def __init__(self, config: TrainConfig, dataset: PartialDataset, validation: Sequence[LabeledExample] | tuple[np.ndarray, np.ndarray], progress: bool = False):
        features, labels = as_arrays(validation, dataset.d)
        if len(labels) == 0:
            raise ConfigError("proportion estimation needs a non-empty validation set")
        total = config.T_warmup + 3 * (config.ramp_epochs + 1) * config.ramp_step_epochs + 1
        self.config = config.with_updates(T_max=total)
        self.trainer = Trainer(self.config, dataset, features, labels, progress=progress)
        self.epoch = 0
        self.calls = 0
        self._warm_up()

    def _warm_up(self) -> None:
        roles = np.full(self.trainer.dataset.n, PartitionRole.NORMAL, dtype=np.int8)
        for _ in tqdm(range(self.config.T_warmup), desc="Warm-up", disable=not self.trainer.progress):
            self.trainer.train_epoch(self.epoch, roles)
            self.trainer.last_outputs = self.trainer.predict_train()
            self.trainer.history.append(self.trainer.last_outputs)
            self.epoch += 1
        outputs = list(self.trainer.history) or [self.trainer.initial_outputs]
        self.trainer.ensemble = warmup_ensemble(outputs, self.config.eta)

    def _staged_epoch(self, normal_fraction: float, gamma1: float, gamma2: float) -> float:
        trainer = self.trainer
        if self.epoch > self.config.T_warmup:
            trainer.ensemble = moving_update(trainer.ensemble, trainer.last_outputs)
        criterion = "decoupled" if self.config.disable_wce else "wooden"
        l, lbar = selection_losses(trainer.ensemble.mean, trainer.dataset.masks, criterion)
        selection = select_by_proportions(l, lbar, normal_fraction, gamma1, gamma2)
        trainer.partition = selection
        train_roles, _ = trainer.assign_roles(selection.roles())
        trainer.open_set.regenerate(selection.open_idx, trainer.streams.candidates)
        trainer.train_epoch(self.epoch, train_roles)
        trainer.last_outputs = trainer.predict_train()
        self.epoch += 1
        return classification_accuracy(trainer.params, trainer.test_features, trainer.test_labels)

    def __call__(self, normal_fraction: float, gamma1: float, gamma2: float) -> float:
        self.calls += 1
        accuracies = [self._staged_epoch(normal_fraction, gamma1, gamma2) for _ in range(self.config.ramp_step_epochs)]
        return float(np.mean(accuracies))


def estimate_with_ramp(config: TrainConfig, dataset: PartialDataset, validation, progress: bool = False):
    """Run the three-stage ramp on a fresh model and return the full ramp result."""
    evaluator = RampEvaluator(config, dataset, validation, progress=progress)
    schedule = RampSchedule(config.normal_start, config.ramp_epochs)
    return run_ramp(evaluator, config.epsilon, schedule)


def count_by_truth(dataset: PartialDataset) -> dict[str, int]:
    return {kind.label: dataset.count(kind) for kind in TruthType}
