import logging
from collections.abc import Sequence
from pathlib import Path

from dotenv import load_dotenv
from threadpoolctl import threadpool_limits
from tqdm import tqdm

from oocpll.config import Config, load_train_config
from oocpll.data.generation import build_corrupted_splits
from oocpll.exceptions import ConfigError
from oocpll.training.reporting import RunReporter, summary_row, write_sweep_summary
from oocpll.training.trainer import run_training
from oocpll.utils.exit_codes import returns_exit_code
from oocpll.utils.logging import setup_logging
from oocpll.utils.random import RandomStreams

SWEEP_AXES = ("alpha", "beta", "phi", "eta", "gamma1", "gamma2", "q", "tau1", "tau2")


def parse_values(values: str | Sequence[str]) -> list[str]:
    if isinstance(values, str):
        values = values.split(",")
    parsed = [value.strip() for value in values if value.strip()]
    if not parsed:
        raise ConfigError("values: the sweep needs at least one value")
    return parsed


@returns_exit_code
def run_sweep(config_path: Path, axis: str, values: str | Sequence[str], out_dir: Path, seed: int | None = None) -> None:
    if axis not in SWEEP_AXES:
        raise ConfigError(f"axis: {axis!r} is not one of {', '.join(SWEEP_AXES)}")
    values = parse_values(values)
    base = load_train_config(config_path, seed=seed)
    app = Config.load()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    # validate the whole grid before training anything
    configs = [base.with_updates(**{axis: value}) for value in values]

    rows = []
    for value, config in tqdm(list(zip(values, configs)), desc=f"Sweeping {axis}"):
        # every value regenerates data from the same seed, so generation axes change the data itself
        splits = build_corrupted_splits(config, RandomStreams.from_seed(config.seed).data)
        reporter = RunReporter(out_dir / f"{axis}={value}", app.storage)
        with threadpool_limits(limits=app.app.threads):
            result = run_training(config, splits.train, splits.test, checkpoint_path=reporter.checkpoint_path)
        reporter.write_all(config, result, splits.train, extra={"sweep": {"axis": axis, "value": value}})
        rows.append(summary_row(axis, value, result))
        logging.info(f"{axis}={value}: final test accuracy {result.final.test_accuracy:.4f}")

    write_sweep_summary(out_dir / app.storage.sweep_summary_csv, rows)


def cmd_sweep(config_path: Path, axis: str, values: str | Sequence[str], out_dir: Path, seed: int | None = None) -> int:
    return run_sweep(config_path, axis, values, out_dir, seed)


if __name__ == "__main__":
    setup_logging()
    load_dotenv()
    raise SystemExit(cmd_sweep(Path("configs/desk.env"), "eta", "0,0.5,0.9,1.0", Path("runs/sweep_eta")))
