"""Command-line entry point: `oocpll synth|train|sweep|estimate|plot`."""

from pathlib import Path

import click
from dotenv import load_dotenv

from oocpll.scripts.estimate_proportions import cmd_estimate
from oocpll.scripts.render_plots import cmd_plot
from oocpll.scripts.run_sweep import SWEEP_AXES, cmd_sweep
from oocpll.scripts.synthesize_dataset import cmd_synth
from oocpll.scripts.train_model import cmd_train
from oocpll.training.ablation import AblationSwitch
from oocpll.utils.logging import setup_logging

config_option = click.option(
    "--config", "config_path", required=True, type=click.Path(path_type=Path), help="Flat key=value experiment config."
)
data_option = click.option(
    "--data", "data_dir", required=True, type=click.Path(path_type=Path), help="Dataset directory written by `synth`."
)
out_option = click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path), help="Output directory.")
seed_option = click.option("--seed", type=int, default=None, help="Override the config's master seed.")


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Log debug records.")
def main(verbose: bool):
    """Partial-label learning with out-of-candidate examples."""
    setup_logging(verbose)
    load_dotenv()


@main.command()
@config_option
@out_option
@seed_option
@click.pass_context
def synth(ctx: click.Context, config_path: Path, out_dir: Path, seed: int | None):
    """Generate the corrupted training set and clean validation and test sets."""
    ctx.exit(cmd_synth(config_path, out_dir, seed))


@main.command()
@config_option
@data_option
@out_option
@seed_option
@click.option(
    "--ablate",
    type=click.Choice([switch.value for switch in AblationSwitch]),
    default=None,
    help="Switch off one component of the method.",
)
@click.pass_context
def train(ctx: click.Context, config_path: Path, data_dir: Path, out_dir: Path, seed: int | None, ablate: str | None):
    """Train on a synthesized dataset and write metrics, manifest and checkpoint."""
    ctx.exit(cmd_train(config_path, data_dir, out_dir, seed, ablate))


@main.command()
@config_option
@out_option
@seed_option
@click.option("--axis", required=True, type=click.Choice(SWEEP_AXES), help="Config key to vary.")
@click.option("--values", required=True, help="Comma-separated values for the axis.")
@click.pass_context
def sweep(ctx: click.Context, config_path: Path, out_dir: Path, seed: int | None, axis: str, values: str):
    """Train once per value of one config key and write a combined summary CSV."""
    ctx.exit(cmd_sweep(config_path, axis, values, out_dir, seed))


@main.command()
@config_option
@data_option
@out_option
@seed_option
@click.pass_context
def estimate(ctx: click.Context, config_path: Path, data_dir: Path, out_dir: Path, seed: int | None):
    """Estimate gamma1 and gamma2 with the clean validation split."""
    ctx.exit(cmd_estimate(config_path, data_dir, out_dir, seed))


@main.command()
@click.option("--run-dir", required=True, type=click.Path(path_type=Path), help="Run or sweep output directory.")
@click.pass_context
def plot(ctx: click.Context, run_dir: Path):
    """Render the CSVs of a run or sweep directory to HTML figures."""
    ctx.exit(cmd_plot(run_dir))


if __name__ == "__main__":
    main()
