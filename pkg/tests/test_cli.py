import json

import polars as pl
import pytest
from click.testing import CliRunner

from oocpll.cli import main

TINY_CONFIG = """\
# four blobs in 2D, small enough for a few seconds of training
n_classes=4
dim=2
n_per_class=20
open_classes=2
n_val_per_class=5
n_test_per_class=10
q=0.3
tau1=0.2
tau2=0.4
hidden_sizes=8
T_warmup=2
phi=1
T_max=4
batch_size=16
seed=3
"""


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def tiny_config(config_file):
    return config_file(TINY_CONFIG)


@pytest.fixture
def data_dir(runner, tiny_config, tmp_path):
    out = tmp_path / "data"
    result = runner.invoke(main, ["synth", "--config", str(tiny_config), "--out", str(out)])
    assert result.exit_code == 0, result.output
    return out


def train(runner, config, data_dir, out, *extra):
    return runner.invoke(main, ["train", "--config", str(config), "--data", str(data_dir), "--out", str(out), *extra])


def test_synth_writes_dataset(runner, tiny_config, tmp_path):
    out = tmp_path / "data"
    result = runner.invoke(main, ["synth", "--config", str(tiny_config), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "train=112 normal=64 closed_set=16 open_set=32 validation=20 test=40" in result.output
    assert {path.name for path in out.iterdir()} == {"train.csv", "train_corruption.csv", "validation.csv", "test.csv"}
    sidecar = pl.read_csv(out / "train_corruption.csv", schema_overrides={"candidate_bits": pl.String})
    assert sidecar.height == 112
    assert sidecar.columns == ["index", "truth_type", "candidate_bits"]


def test_missing_config_is_a_usage_error(runner, tmp_path):
    missing = tmp_path / "nope.env"
    result = runner.invoke(main, ["synth", "--config", str(missing), "--out", str(tmp_path / "data")])
    assert result.exit_code == 2
    assert str(missing) in result.output


def test_invalid_key_is_named(runner, config_file, tmp_path):
    config = config_file(TINY_CONFIG.replace("tau1=0.2", "tau1=1.5"))
    result = runner.invoke(main, ["synth", "--config", str(config), "--out", str(tmp_path / "data")])
    assert result.exit_code == 2
    assert "tau1" in result.output


def test_train_writes_run_artifacts(runner, tiny_config, data_dir, tmp_path):
    out = tmp_path / "run"
    result = train(runner, tiny_config, data_dir, out)
    assert result.exit_code == 0, result.output
    assert "final_test_accuracy=" in result.output
    metrics = pl.read_csv(out / "metrics.csv")
    assert metrics.height == 4
    assert (out / "checkpoint.npz").is_file()
    assert json.loads((out / "manifest.json").read_text())["ablations"] == []


def test_train_with_ablation_records_switch(runner, tiny_config, data_dir, tmp_path):
    out = tmp_path / "run"
    result = train(runner, tiny_config, data_dir, out, "--ablate", "rld")
    assert result.exit_code == 0, result.output
    payload = json.loads((out / "manifest.json").read_text())
    assert payload["config"]["disable_rld"] is True
    assert payload["ablations"] == ["disable_rld"]


def test_unknown_ablation_is_a_usage_error(runner, tiny_config, data_dir, tmp_path):
    assert train(runner, tiny_config, data_dir, tmp_path / "run", "--ablate", "dropout").exit_code == 2


def test_training_is_reproducible(runner, tiny_config, data_dir, tmp_path):
    for name in ("first", "second"):
        assert train(runner, tiny_config, data_dir, tmp_path / name).exit_code == 0
    assert (tmp_path / "first" / "metrics.csv").read_bytes() == (tmp_path / "second" / "metrics.csv").read_bytes()


def test_seed_override_changes_the_run(runner, tiny_config, data_dir, tmp_path):
    assert train(runner, tiny_config, data_dir, tmp_path / "first").exit_code == 0
    assert train(runner, tiny_config, data_dir, tmp_path / "second", "--seed", "4").exit_code == 0
    assert (tmp_path / "first" / "metrics.csv").read_bytes() != (tmp_path / "second" / "metrics.csv").read_bytes()


def test_missing_dataset_is_an_io_failure(runner, tiny_config, tmp_path):
    result = train(runner, tiny_config, tmp_path / "empty", tmp_path / "run")
    assert result.exit_code == 3
    assert "train.csv" in result.output


def test_dataset_config_mismatch_is_a_usage_error(runner, config_file, data_dir, tmp_path):
    config = config_file(TINY_CONFIG.replace("n_classes=4", "n_classes=5"))
    assert train(runner, config, data_dir, tmp_path / "run").exit_code == 2


def test_sweep_writes_one_summary_row_per_value(runner, tiny_config, tmp_path):
    out = tmp_path / "sweep"
    result = runner.invoke(
        main, ["sweep", "--config", str(tiny_config), "--axis", "eta", "--values", "0,0.5,0.9,1.0", "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    summary = pl.read_csv(out / "summary.csv", schema_overrides={"value": pl.String})
    assert summary["value"].to_list() == ["0", "0.5", "0.9", "1.0"]
    assert (out / "eta=0.5" / "metrics.csv").is_file()


@pytest.mark.parametrize(("axis", "values"), [("eta", ""), ("momentum", "0.5")])
def test_bad_sweep_arguments_are_usage_errors(runner, tiny_config, tmp_path, axis, values):
    result = runner.invoke(
        main, ["sweep", "--config", str(tiny_config), "--axis", axis, "--values", values, "--out", str(tmp_path / "s")]
    )
    assert result.exit_code == 2


def test_sweep_rejects_invalid_values_before_training(runner, tiny_config, tmp_path):
    out = tmp_path / "sweep"
    result = runner.invoke(main, ["sweep", "--config", str(tiny_config), "--axis", "eta", "--values", "0.5,2", "--out", str(out)])
    assert result.exit_code == 2
    assert "eta" in result.output
    assert not (out / "eta=0.5").exists()


def test_plot_renders_run_figures(runner, tiny_config, data_dir, tmp_path):
    out = tmp_path / "run"
    assert train(runner, tiny_config, data_dir, out).exit_code == 0
    result = runner.invoke(main, ["plot", "--run-dir", str(out)])
    assert result.exit_code == 0, result.output
    for name in ("precision.html", "accuracy.html", "losses_warmup.html", "losses_final.html"):
        assert (out / name).is_file()


def test_plot_without_csvs_is_an_io_failure(runner, tmp_path):
    assert runner.invoke(main, ["plot", "--run-dir", str(tmp_path)]).exit_code == 3


def test_verbose_flag(runner, tiny_config, tmp_path):
    result = runner.invoke(main, ["-v", "synth", "--config", str(tiny_config), "--out", str(tmp_path / "data")])
    assert result.exit_code == 0, result.output


def test_estimate_writes_proportions(runner, config_file, data_dir, tmp_path):
    config = config_file(TINY_CONFIG + "epsilon=100\n")
    out = tmp_path / "estimate"
    result = runner.invoke(main, ["estimate", "--config", str(config), "--data", str(data_dir), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "gamma1=0.0000 gamma2=0.0000" in result.output
    payload = json.loads((out / "proportions.json").read_text())
    assert payload["normal_fraction"] == 1.0
    assert payload["trace"][0]["stage"] == "normal"
