import plotly.express as px
import polars as pl


def _layout(fig, x_title: str, y_title: str, legend_title: str):
    fig.update_layout(
        template="plotly_white",
        margin={"l": 20, "r": 20, "t": 60, "b": 40},
        xaxis_title=x_title,
        yaxis_title=y_title,
        legend_title_text=legend_title,
    )
    return fig


def create_dataset_for_precision_plot(metrics: pl.DataFrame) -> pl.DataFrame:
    """Long format of the per-type precision columns, warm-up epochs dropped."""
    return (
        metrics.select("epoch", "precision_normal", "precision_closed", "precision_open")
        .unpivot(index="epoch", variable_name="pool", value_name="precision")
        .with_columns(pl.col("pool").str.replace("precision_", ""))
        .drop_nulls("precision")
    )


def create_precision_plot(metrics: pl.DataFrame):
    fig = px.line(
        create_dataset_for_precision_plot(metrics),
        x="epoch",
        y="precision",
        color="pool",
        title="Selection precision per pool",
    )
    fig.update_yaxes(range=[0, 1.02])
    return _layout(fig, "Epoch", "Precision", "Pool")


def create_accuracy_plot(metrics: pl.DataFrame):
    df = metrics.select("epoch", "test_accuracy", "disambiguation_rate").unpivot(
        index="epoch", variable_name="series", value_name="value"
    )
    fig = px.line(df, x="epoch", y="value", color="series", title="Test accuracy and disambiguation rate")
    return _layout(fig, "Epoch", "Rate", "Series")


def create_histogram_plot(histograms: pl.DataFrame, stage: str, criterion: str = "wooden"):
    """Bar chart of one stage's loss histograms, one facet per side of the label space."""
    df = histograms.filter((pl.col("stage") == stage) & (pl.col("criterion") == criterion)).with_columns(
        ((pl.col("bin_left") + pl.col("bin_right")) / 2).alias("bin_center")
    )
    fig = px.bar(
        df,
        x="bin_center",
        y="count",
        color="truth_type",
        facet_col="side",
        barmode="overlay",
        opacity=0.6,
        title=f"{criterion.capitalize()} loss distribution ({stage})",
    )
    fig.update_xaxes(matches=None)
    return _layout(fig, "Loss", "Examples", "Truth type")


def create_sweep_plot(summary: pl.DataFrame):
    df = summary.with_columns(pl.col("value").cast(pl.Float64, strict=False).alias("numeric_value")).sort("numeric_value")
    axis = df["axis"][0] if len(df) else "value"
    fig = px.line(df, x="value", y="final_accuracy", markers=True, title=f"Final test accuracy across {axis}")
    return _layout(fig, axis, "Final test accuracy", "")
