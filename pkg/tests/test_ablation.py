import numpy as np
import pytest

from oocpll.exceptions import ConfigError
from oocpll.training.ablation import AblationResult, AblationSwitch, apply_switch, run_ablation
from oocpll.training.trainer import run_training


@pytest.mark.parametrize(
    ("switch", "key"),
    [("ld", "disable_ld"), ("rld", "disable_rld"), ("wce", "disable_wce"), ("drop-open", "drop_open")],
)
def test_switch_turns_on_its_config_key(small_config, switch, key):
    ablated = apply_switch(small_config, switch)
    assert getattr(ablated, key)
    assert ablated.ablation_switches == [key]


def test_warmup_switch_removes_warm_up(small_config):
    ablated = apply_switch(small_config, AblationSwitch.WARMUP)
    assert ablated.T_warmup == 0


def test_unknown_switch_is_rejected(small_config):
    with pytest.raises(ConfigError, match="unknown switch"):
        apply_switch(small_config, "dropout")


def test_switches_do_not_stack(small_config):
    with pytest.raises(ConfigError, match="already"):
        apply_switch(apply_switch(small_config, "ld"), "rld")


def test_one_switch_per_paired_run(small_config, small_splits):
    with pytest.raises(ConfigError, match="exactly one"):
        run_ablation(small_config, small_splits.train, small_splits.test, ["ld", "rld"])


def test_paired_run_shares_the_full_method(small_config, small_splits):
    result = run_ablation(small_config, small_splits.train, small_splits.test, ["rcg"])
    full = run_training(small_config, small_splits.train, small_splits.test)
    assert result.switch is AblationSwitch.RCG
    assert result.full.metrics == full.metrics
    assert result.accuracy_gap == pytest.approx(full.final.test_accuracy - result.ablated.final.test_accuracy)


def test_switching_off_disambiguation_keeps_confidences_uniform(small_config, small_splits):
    ablated = run_training(apply_switch(small_config, "ld"), small_splits.train, small_splits.test)
    masks = small_splits.train.masks
    expected = masks / masks.sum(axis=1, keepdims=True)
    assert (ablated.table.p == expected).all()


def test_warm_up_switch_selects_from_the_first_epoch(small_config, small_splits):
    ablated = run_training(apply_switch(small_config, "warmup"), small_splits.train, small_splits.test)
    assert ablated.metrics[0].n_open == 64
    assert ablated.metrics[0].precision_open is not None


@pytest.fixture(scope="module")
def desk_ablations(desk_runs):
    """Paired results for each switch, one per desk seed, sharing the session's full-method runs."""
    return {
        switch: [
            AblationResult(AblationSwitch.parse(switch), full, run_training(apply_switch(config, switch), splits.train, splits.test))
            for config, splits, full in desk_runs
        ]
        for switch in ("ld", "rld", "wce")
    }


@pytest.mark.slow
@pytest.mark.parametrize("switch", ["ld", "rld", "wce"])
def test_desk_scale_ablation_lowers_accuracy(desk_ablations, switch):
    assert np.mean([result.accuracy_gap for result in desk_ablations[switch]]) > 0


@pytest.mark.slow
def test_desk_scale_partial_level_loss_blurs_closed_selection(desk_ablations):
    results = desk_ablations["wce"]
    ablated = np.mean([result.ablated.final.precision_closed for result in results])
    full = np.mean([result.full.final.precision_closed for result in results])
    assert ablated < full
