import json
import logging
from pathlib import Path

import click
from dotenv import load_dotenv
from threadpoolctl import threadpool_limits

from oocpll.config import Config, load_train_config
from oocpll.data.dataset_io import load_examples, load_partial_dataset
from oocpll.training.trainer import estimate_with_ramp
from oocpll.utils.exit_codes import returns_exit_code
from oocpll.utils.logging import setup_logging


@returns_exit_code
def estimate_proportions(config_path: Path, data_dir: Path, out_dir: Path, seed: int | None = None) -> None:
    config = load_train_config(config_path, seed=seed)
    app = Config.load()
    storage = app.storage
    dataset = load_partial_dataset(data_dir, config.n_classes, expected_dim=config.dim, storage=storage)
    validation = load_examples(data_dir, storage.validation_csv, config.n_classes, expected_dim=config.dim)

    with threadpool_limits(limits=app.app.threads):
        result = estimate_with_ramp(config, dataset, validation, progress=True)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / storage.proportions_json
    payload = {
        "normal_fraction": result.normal_fraction,
        "gamma1": result.gamma1,
        "gamma2": result.gamma2,
        "epsilon": config.epsilon,
        "trace": [
            {"stage": stage, "normal_fraction": normal, "gamma1": g1, "gamma2": g2, "accuracy": accuracy}
            for stage, normal, g1, g2, accuracy in result.trace
        ],
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    logging.info(f"Wrote proportion estimate to {path}")
    click.echo(f"gamma1={result.gamma1:.4f} gamma2={result.gamma2:.4f}")


def cmd_estimate(config_path: Path, data_dir: Path, out_dir: Path, seed: int | None = None) -> int:
    return estimate_proportions(config_path, data_dir, out_dir, seed)


if __name__ == "__main__":
    setup_logging()
    load_dotenv()
    raise SystemExit(cmd_estimate(Path("configs/desk.env"), Path("data/desk"), Path("runs/estimate")))
