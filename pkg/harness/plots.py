"""Sweep figures built from report CSVs alone, and case-study figures from trace logs."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Iterable, Literal, Mapping, Optional, Sequence

import pandas as pd
import plotly.express as px
import plotly.graph_objects as go
from plotly.subplots import make_subplots

from app_core.errors import ArgumentError, StorageError

logger = logging.getLogger(__name__)

METRIC_TITLES = {
    "tsr": "Task success rate",
    "tns": "Trials to success",
    "pc_recip": "Planning cost (100 / cost)",
}


def sweep_label(axis: str, value) -> str:
    """Task label of one sweep cell, e.g. ``correlation_length=5``."""

    return f"{axis.rpartition('.')[2]}={value}"


def axis_values(frame: pd.DataFrame) -> pd.Series:
    """Numeric sweep value parsed back out of the ``task`` label."""

    raw = frame["task"].astype(str).str.rpartition("=")[2]
    numeric = pd.to_numeric(raw, errors="coerce")
    return numeric if numeric.notna().all() else raw


def sweep_table(frame: pd.DataFrame, metric: str) -> pd.DataFrame:
    """Mean of ``metric`` over seeds per (policy, sweep value)."""

    if metric not in frame.columns:
        raise ArgumentError(f"report has no column {metric!r}")
    table = frame.assign(value=axis_values(frame))
    table = table.groupby(["policy", "value"], sort=True, as_index=False)[metric].mean()
    return table.sort_values(["policy", "value"], kind="mergesort").reset_index(drop=True)


def create_sweep_chart(frame: pd.DataFrame, metric: str, axis: Optional[str] = None) -> go.Figure:
    table = sweep_table(frame, metric)
    axis_name = (axis or "task").rpartition(".")[2]
    fig = px.line(
        table,
        x="value",
        y=metric,
        color="policy",
        markers=True,
        title=f"{METRIC_TITLES.get(metric, metric)} vs {axis_name}",
        labels={"value": axis_name, metric: metric},
    )
    fig.update_layout(template="plotly_white", legend_title_text="policy")
    return fig


def write_figure(fig: go.Figure, path: Path, fmt: Literal["svg", "html"] = "svg") -> Path:
    """Write ``fig`` as SVG, or as standalone HTML when no static export engine is installed."""

    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "svg":
        target = path.with_suffix(".svg")
        try:
            fig.write_image(str(target), format="svg")
            logger.info("Plot written: %s", target)
            return target
        except (ImportError, ValueError, RuntimeError) as exc:
            logger.warning("SVG export unavailable (%s); writing HTML instead", exc)
    target = path.with_suffix(".html")
    try:
        fig.write_html(str(target), include_plotlyjs=True, full_html=True, div_id=f"plot-{path.stem}")
    except OSError as exc:
        raise StorageError(f"cannot write plot {target}: {exc}") from exc
    logger.info("Plot written: %s", target)
    return target


def plot_reports(
    frame: pd.DataFrame,
    out_dir: Path,
    *,
    metrics: Iterable[str] = ("tsr", "tns"),
    axis: Optional[str] = None,
    fmt: Literal["svg", "html"] = "svg",
    stem: str = "sweep",
) -> list[Path]:
    """One figure per metric; rows with an empty metric (e.g. tns without successes) are dropped."""

    written = []
    for metric in metrics:
        usable = frame.dropna(subset=[metric]) if metric in frame.columns else frame
        if usable.empty:
            logger.warning("No values for %s; skipping its plot", metric)
            continue
        fig = create_sweep_chart(usable, metric, axis)
        written.append(write_figure(fig, Path(out_dir) / f"{stem}-{metric}", fmt))
    return written


def create_case_chart(records: Sequence[Mapping[str, Any]], title: Optional[str] = None) -> go.Figure:
    """One panel per policy: trials down, actions across, colour = probability of each untried action.

    Chosen actions are marked with a star when they passed and a cross when they failed.
    """

    if not records:
        raise ArgumentError("a case chart needs at least one case-study record")
    titles = [f"{record['policy']} ({'pass' if record['succeeded'] else 'fail'})" for record in records]
    fig = make_subplots(rows=1, cols=len(records), shared_yaxes=True, subplot_titles=titles)
    for col, record in enumerate(records, start=1):
        trials = record["trials"]
        rows = [trial["trial"] for trial in trials]
        fig.add_trace(
            go.Heatmap(
                z=[trial["distribution"] for trial in trials],
                y=rows,
                coloraxis="coloraxis",
                hovertemplate="action %{x}<br>trial %{y}<br>p=%{z:.3f}<extra></extra>",
            ),
            row=1,
            col=col,
        )
        fig.add_trace(
            go.Scatter(
                x=[trial["action"] for trial in trials],
                y=rows,
                mode="markers",
                marker=dict(
                    symbol=["star" if trial["passed"] else "x" for trial in trials],
                    size=12,
                    color="white",
                    line=dict(width=1, color="black"),
                ),
                name=record["policy"],
                showlegend=False,
            ),
            row=1,
            col=col,
        )
        fig.update_xaxes(title_text="action", row=1, col=col)
    fig.update_yaxes(title_text="trial", autorange="reversed", dtick=1, row=1, col=1)
    fig.update_layout(
        template="plotly_white",
        coloraxis=dict(colorscale="Jet", cmin=0.0),
        title=title or f"Episode {records[0].get('episode')}",
    )
    return fig


def plot_case_studies(
    records: Iterable[Mapping[str, Any]],
    out_dir: Path,
    *,
    fmt: Literal["svg", "html"] = "svg",
    stem: str = "cases",
) -> list[Path]:
    """One figure per replayed episode, policies side by side."""

    by_episode: dict[Any, list[Mapping[str, Any]]] = {}
    for record in records:
        by_episode.setdefault(record["episode"], []).append(record)
    written = []
    for episode, group in by_episode.items():
        passing = ", ".join(str(action) for action in group[0].get("passing", []))
        fig = create_case_chart(group, title=f"Episode {episode} (passing actions: {passing})")
        written.append(write_figure(fig, Path(out_dir) / f"{stem}-episode{episode}", fmt))
    return written


__all__ = [
    "axis_values",
    "create_case_chart",
    "create_sweep_chart",
    "plot_case_studies",
    "plot_reports",
    "sweep_label",
    "sweep_table",
    "write_figure",
]
