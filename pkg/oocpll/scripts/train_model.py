import logging
from pathlib import Path

import click
from dotenv import load_dotenv
from threadpoolctl import threadpool_limits

from oocpll.config import Config, TrainConfig, load_train_config
from oocpll.data.dataset_io import load_examples, load_partial_dataset
from oocpll.training.ablation import apply_switch
from oocpll.training.reporting import RunReporter
from oocpll.training.trainer import TrainingResult, run_training
from oocpll.utils.exit_codes import returns_exit_code
from oocpll.utils.logging import setup_logging


def train_from_directory(config: TrainConfig, data_dir: Path, out_dir: Path, progress: bool = True) -> TrainingResult:
    """Load a synthesized dataset, train on it and write every run artifact to `out_dir`."""
    app = Config.load()
    storage = app.storage
    dataset = load_partial_dataset(data_dir, config.n_classes, expected_dim=config.dim, storage=storage)
    test = load_examples(data_dir, storage.test_csv, config.n_classes, expected_dim=config.dim)

    reporter = RunReporter(out_dir, storage)
    with threadpool_limits(limits=app.app.threads):
        result = run_training(config, dataset, test, checkpoint_path=reporter.checkpoint_path, progress=progress)
    reporter.write_all(config, result, dataset, extra={"data_dir": str(data_dir)})
    return result


@returns_exit_code
def train_model(config_path: Path, data_dir: Path, out_dir: Path, seed: int | None = None, ablate: str | None = None) -> None:
    config = load_train_config(config_path, seed=seed)
    if ablate:
        config = apply_switch(config, ablate)

    result = train_from_directory(config, data_dir, out_dir)

    logging.info(f"Wrote run artifacts to {out_dir}")
    click.echo(f"final_test_accuracy={result.final.test_accuracy:.4f}")


def cmd_train(config_path: Path, data_dir: Path, out_dir: Path, seed: int | None = None, ablate: str | None = None) -> int:
    return train_model(config_path, data_dir, out_dir, seed, ablate)


if __name__ == "__main__":
    setup_logging()
    load_dotenv()
    raise SystemExit(cmd_train(Path("configs/desk.env"), Path("data/desk"), Path("runs/desk")))
