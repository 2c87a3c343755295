import marimo

__generated_with = "0.18.1"
app = marimo.App(width="full")


@app.cell
def _():
    import polars as pl
    from dotenv import load_dotenv

    load_dotenv()
    run_dir = "runs/desk"
    return pl, run_dir


@app.cell
def _(pl, run_dir):
    from oocpll.training.plots import create_accuracy_plot, create_precision_plot

    metrics = pl.read_csv(f"{run_dir}/metrics.csv")
    fig = create_precision_plot(metrics)
    fig.write_html("precision.html")
    fig
    return create_accuracy_plot, metrics


@app.cell
def _(create_accuracy_plot, metrics):
    create_accuracy_plot(metrics)
    return


@app.cell
def _(pl, run_dir):
    from oocpll.training.plots import create_histogram_plot

    histograms = pl.read_csv(f"{run_dir}/loss_histograms.csv")
    fig2 = create_histogram_plot(histograms, "final")
    fig2.write_html("losses_final.html")
    fig2
    return create_histogram_plot, histograms


@app.cell
def _(create_histogram_plot, histograms):
    # the partial-level loss for comparison; closed-set and normal examples overlap here
    create_histogram_plot(histograms, "final", criterion="decoupled")
    return


@app.cell
def _(pl, run_dir):
    confidences = pl.read_csv(f"{run_dir}/confidences.csv")
    confidences.group_by("truth_type").agg(pl.col("top_confidence").mean()).sort("truth_type")
    return


@app.cell
def _(pl, run_dir):
    pl.read_csv(f"{run_dir}/metrics.csv").filter(pl.col("epoch") >= 95)
    return


if __name__ == "__main__":
    app.run()
