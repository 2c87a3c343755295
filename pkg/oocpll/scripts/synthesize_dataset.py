import logging
from pathlib import Path

import click
from dotenv import load_dotenv

from oocpll.config import Config, load_train_config
from oocpll.data.dataset_io import write_partial_dataset
from oocpll.data.generation import build_corrupted_splits
from oocpll.training.trainer import count_by_truth
from oocpll.utils.exit_codes import returns_exit_code
from oocpll.utils.logging import setup_logging
from oocpll.utils.random import RandomStreams


@returns_exit_code
def synthesize_dataset(config_path: Path, out_dir: Path, seed: int | None = None) -> None:
    config = load_train_config(config_path, seed=seed)
    storage = Config.load().storage

    splits = build_corrupted_splits(config, RandomStreams.from_seed(config.seed).data)
    write_partial_dataset(out_dir, splits, storage)

    counts = count_by_truth(splits.train)
    logging.info(f"Wrote {splits.train.n} training examples to {out_dir}")
    click.echo(
        f"train={splits.train.n} normal={counts['normal']} closed_set={counts['closed_set']} "
        f"open_set={counts['open_set']} validation={len(splits.validation)} test={len(splits.test)}"
    )


def cmd_synth(config_path: Path, out_dir: Path, seed: int | None = None) -> int:
    return synthesize_dataset(config_path, out_dir, seed)


if __name__ == "__main__":
    setup_logging()
    load_dotenv()
    raise SystemExit(cmd_synth(Path("configs/desk.env"), Path("data/desk")))
