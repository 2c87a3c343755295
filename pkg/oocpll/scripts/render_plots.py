import logging
from pathlib import Path

import polars as pl
from dotenv import load_dotenv

from oocpll.config import Config
from oocpll.exceptions import DatasetFileNotFoundError
from oocpll.training.plots import create_accuracy_plot, create_histogram_plot, create_precision_plot, create_sweep_plot
from oocpll.utils.exit_codes import returns_exit_code
from oocpll.utils.logging import setup_logging


@returns_exit_code
def render_plots(run_dir: Path) -> None:
    """Render the data CSVs of a run (or sweep) directory to HTML figures next to them."""
    storage = Config.load().storage
    run_dir = Path(run_dir)
    metrics_path = run_dir / storage.metrics_csv
    histogram_path = run_dir / storage.loss_histograms_csv
    summary_path = run_dir / storage.sweep_summary_csv
    written = []

    if metrics_path.is_file():
        metrics = pl.read_csv(metrics_path)
        create_precision_plot(metrics).write_html(run_dir / "precision.html")
        create_accuracy_plot(metrics).write_html(run_dir / "accuracy.html")
        written += ["precision.html", "accuracy.html"]
    if histogram_path.is_file():
        histograms = pl.read_csv(histogram_path)
        for stage in histograms["stage"].unique(maintain_order=True):
            name = f"losses_{stage}.html"
            create_histogram_plot(histograms, stage).write_html(run_dir / name)
            written.append(name)
    if summary_path.is_file():
        create_sweep_plot(pl.read_csv(summary_path, schema_overrides={"value": pl.String})).write_html(run_dir / "sweep.html")
        written.append("sweep.html")

    if not written:
        raise DatasetFileNotFoundError(f"No metrics, histogram or sweep summary CSV found in {run_dir}")
    logging.info(f"Rendered {', '.join(written)} in {run_dir}")


def cmd_plot(run_dir: Path) -> int:
    return render_plots(run_dir)


if __name__ == "__main__":
    setup_logging()
    load_dotenv()
    raise SystemExit(cmd_plot(Path("runs/desk")))
