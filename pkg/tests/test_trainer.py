from dataclasses import fields

import numpy as np
import pytest

from oocpll.config import TrainConfig
from oocpll.data.generation import build_corrupted_splits
from oocpll.exceptions import ConfigError, InconsistentDimensionError, NonFiniteLossError
from oocpll.selection.partition import PartitionRole
from oocpll.training.trainer import RampEvaluator, Trainer, as_arrays, count_by_truth, estimate_with_ramp, run_training
from oocpll.utils.random import RandomStreams


@pytest.fixture
def result(small_config, small_splits):
    return run_training(small_config, small_splits.train, small_splits.test)


def test_one_metrics_row_per_epoch(result, small_config):
    assert [row.epoch for row in result.metrics] == list(range(small_config.T_max))


def test_warm_up_trains_every_example_as_normal(result, small_config):
    for row in result.metrics[: small_config.T_warmup]:
        assert row.loss_closed == 0.0
        assert row.loss_open == 0.0
        assert row.precision_normal is None
        assert row.precision_closed is None
        assert row.n_closed == 0


def test_selection_runs_after_warm_up(result, small_config, small_splits):
    row = result.metrics[small_config.T_warmup]
    assert (row.n_closed, row.n_open) == (32, 64)
    assert row.n_normal == small_splits.train.n - 96
    assert row.precision_closed is not None
    assert row.loss_open > 0.0


def test_losses_and_accuracy_are_well_formed(result):
    for row in result.metrics:
        assert np.isfinite([row.loss_normal, row.loss_closed, row.loss_open, row.loss_total]).all()
        assert 0.0 <= row.test_accuracy <= 1.0
        assert row.lr > 0.0


def test_learning_rate_follows_cosine_schedule(result, small_config):
    lrs = [row.lr for row in result.metrics]
    assert lrs[0] == pytest.approx(small_config.base_lr)
    assert lrs == sorted(lrs, reverse=True)


def test_warm_up_and_final_loss_snapshots(result):
    assert [snapshot.stage for snapshot in result.loss_snapshots] == ["warmup", "final"]


def test_runs_are_deterministic(small_config, small_splits, result):
    again = run_training(small_config, small_splits.train, small_splits.test)
    assert again.metrics == result.metrics
    for first, second in zip(result.params.tensors(), again.params.tensors()):
        np.testing.assert_array_equal(first, second)


def test_zero_proportions_match_the_pure_disambiguation_baseline(small_config, small_splits):
    no_ooc = run_training(small_config.with_updates(gamma1=0.0, gamma2=0.0), small_splits.train, small_splits.test)
    baseline = run_training(small_config.with_updates(T_warmup=small_config.T_max), small_splits.train, small_splits.test)
    skipped = {"precision_normal", "precision_closed", "precision_open"}
    for row, base in zip(no_ooc.metrics, baseline.metrics):
        for name in (f.name for f in fields(row)):
            if name not in skipped:
                assert getattr(row, name) == getattr(base, name), name


def test_baseline_never_selects(small_config, small_splits):
    baseline = run_training(small_config.with_updates(T_warmup=small_config.T_max), small_splits.train, small_splits.test)
    assert baseline.partition is None
    assert all(row.precision_open is None for row in baseline.metrics)


def test_selection_dump_covers_every_selection_epoch(small_config, small_splits):
    dumped = run_training(small_config.with_updates(dump_selection=True), small_splits.train, small_splits.test)
    assert [record.epoch for record in dumped.selections] == [3, 4, 5]
    assert (dumped.selections[0].roles == PartitionRole.OPEN_SET).sum() == 64


def test_non_finite_loss_stops_training(small_config, small_splits, mocker):
    mocker.patch("oocpll.training.trainer.loss_normal", return_value=float("nan"))
    with pytest.raises(NonFiniteLossError) as excinfo:
        run_training(small_config, small_splits.train, small_splits.test)
    assert excinfo.value.epoch == 0
    assert excinfo.value.partition == "normal"


def test_class_count_mismatch_is_rejected(small_config, small_splits):
    with pytest.raises(ConfigError, match="n_classes"):
        run_training(small_config.with_updates(n_classes=5), small_splits.train, small_splits.test)


def test_test_feature_dimension_mismatch_is_rejected(small_config, small_splits):
    with pytest.raises(InconsistentDimensionError):
        run_training(small_config, small_splits.train, (np.zeros((4, 3)), np.zeros(4, dtype=np.int64)))


def test_closed_set_rows_train_on_reversed_confidences(small_config, small_splits):
    trainer = Trainer(small_config, small_splits.train, *as_arrays(small_splits.test, small_splits.train.d))
    roles = np.full(small_splits.train.n, PartitionRole.NORMAL, dtype=np.int8)
    roles[:5] = PartitionRole.CLOSED_SET
    train_roles, table_roles = trainer.assign_roles(roles)
    closed = np.flatnonzero(table_roles == PartitionRole.CLOSED_SET)
    assert not (trainer.table.pbar[closed] * small_splits.train.masks[closed]).any()
    np.testing.assert_allclose(trainer.table.pbar[closed].sum(axis=1), 1.0)
    assert (train_roles[closed] == PartitionRole.CLOSED_SET).all()


def test_drop_switches_exclude_ooc_rows(small_config, small_splits):
    config = small_config.with_updates(drop_closed=True, drop_open=True)
    trainer = Trainer(config, small_splits.train, *as_arrays(small_splits.test, small_splits.train.d))
    roles = np.full(small_splits.train.n, PartitionRole.NORMAL, dtype=np.int8)
    roles[0] = PartitionRole.CLOSED_SET
    roles[1] = PartitionRole.OPEN_SET
    train_roles, _ = trainer.assign_roles(roles)
    assert train_roles[:2].tolist() == [PartitionRole.EXCLUDED, PartitionRole.EXCLUDED]


def test_pool_losses_are_divided_by_batch_size_by_default(small_config, small_splits):
    features, labels = as_arrays(small_splits.test, small_splits.train.d)
    assert Trainer(small_config, small_splits.train, features, labels)._normalizers(32, (20, 4, 8)) == (32, 32, 32)
    per_pool = Trainer(small_config.with_updates(loss_norm="partition"), small_splits.train, features, labels)
    assert per_pool._normalizers(32, (20, 4, 8)) == (20, 4, 8)


def test_count_by_truth(small_splits):
    assert count_by_truth(small_splits.train) == {"normal": 128, "closed_set": 32, "open_set": 64}


def test_ramp_evaluator_reports_validation_accuracy(small_config, small_splits):
    config = small_config.with_updates(ramp_epochs=4, ramp_step_epochs=2)
    evaluator = RampEvaluator(config, small_splits.train, small_splits.validation)
    accuracy = evaluator(0.5, 0.1, 0.1)
    assert 0.0 <= accuracy <= 1.0
    assert evaluator.epoch == small_config.T_warmup + 2
    assert evaluator.config.T_max == small_config.T_warmup + 3 * 5 * 2 + 1


def test_ramp_evaluator_averages_accuracy_over_step_epochs(small_config, small_splits, mocker):
    evaluator = RampEvaluator(small_config.with_updates(ramp_step_epochs=3), small_splits.train, small_splits.validation)
    mocker.patch("oocpll.training.trainer.classification_accuracy", side_effect=[0.5, 0.7, 0.9])
    assert evaluator(0.6, 0.0, 0.0) == pytest.approx(0.7)
    assert evaluator.calls == 1


def test_ramp_estimation_returns_feasible_proportions(small_config, small_splits):
    config = small_config.with_updates(ramp_epochs=4, epsilon=100.0)
    result = estimate_with_ramp(config, small_splits.train, small_splits.validation)
    assert result.normal_fraction == pytest.approx(1.0)
    assert (result.gamma1, result.gamma2) == (0.0, 0.0)
    assert result.trace[0][0] == "normal"


def _mean_final(results, name: str = "test_accuracy") -> float:
    return float(np.mean([getattr(result.final, name) for result in results]))


def _full_and_baseline_accuracy(config: TrainConfig) -> tuple[float, float]:
    splits = build_corrupted_splits(config, RandomStreams.from_seed(config.seed).data)
    full = run_training(config, splits.train, splits.test)
    baseline = run_training(config.with_updates(T_warmup=config.T_max), splits.train, splits.test)
    return full.final.test_accuracy, baseline.final.test_accuracy


@pytest.fixture(scope="module")
def desk_baselines(desk_runs):
    return [run_training(config.with_updates(T_warmup=config.T_max), splits.train, splits.test) for config, splits, _ in desk_runs]


@pytest.fixture(scope="module")
def corruption_drops(desk_seeds):
    """Mean final accuracy lost by (full method, baseline) when (tau1, tau2) rises from (0.2, 0.4) to (0.3, 0.6)."""
    drops = []
    for seed in desk_seeds:
        # six open clusters so the auxiliary pool covers tau2=0.6
        mild = _full_and_baseline_accuracy(TrainConfig(seed=seed, open_classes=6))
        harsh = _full_and_baseline_accuracy(TrainConfig(seed=seed, open_classes=6, tau1=0.3, tau2=0.6))
        drops.append(np.subtract(mild, harsh))
    return np.mean(drops, axis=0)


@pytest.mark.slow
def test_desk_scale_beats_disambiguation_baseline(desk_runs, desk_baselines):
    full = [result for _, _, result in desk_runs]
    assert _mean_final(full) >= _mean_final(desk_baselines) + 0.03


@pytest.mark.slow
@pytest.mark.parametrize("pool", ["normal", "closed", "open"])
def test_desk_scale_selection_precision(desk_runs, pool):
    assert _mean_final([result for _, _, result in desk_runs], f"precision_{pool}") >= 0.80


@pytest.mark.slow
def test_desk_scale_stronger_corruption_hurts_baseline_more(corruption_drops):
    full_drop, baseline_drop = corruption_drops
    assert baseline_drop > full_drop


@pytest.mark.slow
def test_desk_scale_confidences_settle(desk_runs):
    deltas = np.array([[row.confidence_delta for row in result.metrics] for _, _, result in desk_runs])
    assert deltas[:, -10:].mean() < deltas[:, 10:21].mean()


@pytest.mark.slow
def test_desk_scale_estimate_is_close_to_true_shares(desk_seeds):
    estimates = []
    for seed in desk_seeds:
        config = TrainConfig(seed=seed, epsilon=2.0)
        splits = build_corrupted_splits(config, RandomStreams.from_seed(seed).data)
        result = estimate_with_ramp(config, splits.train, splits.validation)
        estimates.append((result.gamma1, result.gamma2))
    gamma1, gamma2 = np.mean(estimates, axis=0)
    config = TrainConfig()
    assert gamma1 == pytest.approx(config.gamma1, abs=0.1)
    assert gamma2 == pytest.approx(config.gamma2, abs=0.1)
