"""CSV and markdown reports in the planning-table layouts."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Literal, Sequence

import pandas as pd

from ..exceptions import ContractError, RecordFormatError
from ..models.metrics import JudgeScore, PlanMetrics

logger = logging.getLogger(__name__)

ReportFormat = Literal["csv", "markdown"]

HORIZON_COLUMNS = ["L2 1s", "L2 2s", "L2 3s", "L2 Avg", "Col 1s", "Col 2s", "Col 3s", "Col Avg"]
MISMATCH_COLUMN = "Mismatch(%)"
ABLATION_COLUMNS = ["Method", "L2(m)", "Col.Rate(%)", MISMATCH_COLUMN]
JUDGE_COLUMNS = ["Gaze", "Scene Understanding", "Reasoning", "Decision"]


def horizon_table(metrics: PlanMetrics) -> pd.DataFrame:
    """One row: L2 at 1s, 2s, 3s, Avg then collision rate at the same horizons, plus mismatch when known."""
    row = [
        metrics.l2_1s, metrics.l2_2s, metrics.l2_3s, metrics.l2_avg,
        metrics.col_1s, metrics.col_2s, metrics.col_3s, metrics.col_avg,
    ]
    columns = list(HORIZON_COLUMNS)
    if metrics.mismatch_rate is not None:
        row.append(metrics.mismatch_rate)
        columns.append(MISMATCH_COLUMN)
    return pd.DataFrame([row], columns=columns)


def ablation_table(rows: Sequence[tuple[str, PlanMetrics]]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            [label, m.l2_avg, m.col_avg, m.mismatch_rate if m.mismatch_rate is not None else float("nan")]
            for label, m in rows
        ],
        columns=ABLATION_COLUMNS,
    )


def judge_table(scores: Sequence[JudgeScore]) -> pd.DataFrame:
    """Mean score per dimension, scaled to 0-100."""
    if not scores:
        raise ContractError("judge_table needs at least one score")
    frame = pd.DataFrame([s.model_dump() for s in scores])
    means = frame[["gaze", "scene_understanding", "reasoning", "decision"]].mean() * 100.0
    return pd.DataFrame([means.to_list()], columns=JUDGE_COLUMNS)


def _cell(value) -> str:
    if isinstance(value, str):
        return value
    if pd.isna(value):
        return ""
    return f"{value:.2f}"


def to_markdown(table: pd.DataFrame) -> str:
    lines = [
        "| " + " | ".join(table.columns) + " |",
        "|" + "|".join("---" for _ in table.columns) + "|",
    ]
    for row in table.itertuples(index=False):
        lines.append("| " + " | ".join(_cell(v) for v in row) + " |")
    return "\n".join(lines) + "\n"


def emit_report(
    metrics: PlanMetrics | pd.DataFrame | Sequence[tuple[str, PlanMetrics]],
    path: Path,
    format: ReportFormat = "csv",
) -> pd.DataFrame:
    """Write the table with two decimals; a single PlanMetrics gives the horizon layout, labelled rows the ablation layout."""
    if isinstance(metrics, PlanMetrics):
        table = horizon_table(metrics)
    elif isinstance(metrics, pd.DataFrame):
        table = metrics
    else:
        table = ablation_table(metrics)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if format == "csv":
            table.to_csv(path, index=False, float_format="%.2f")
        elif format == "markdown":
            path.write_text(to_markdown(table), encoding="utf-8")
        else:
            raise ContractError(f"unknown report format {format!r}")
    except OSError as e:
        raise ContractError(f"cannot write report {path}: {e}") from e
    logger.info(f"Wrote {format} report with {len(table)} rows to {path}")
    return table


def read_report(path: Path) -> pd.DataFrame:
    """Parse a report written by :func:`emit_report`, either format."""
    text = path.read_text(encoding="utf-8")
    if not text.lstrip().startswith("|"):
        return pd.read_csv(path)
    rows = [
        [cell.strip() for cell in line.strip().strip("|").split("|")]
        for line in text.splitlines()
        if line.strip().startswith("|")
    ]
    if len(rows) < 2:
        raise RecordFormatError(f"{path}: markdown table needs a header and a separator line")
    header, body = rows[0], rows[2:]
    frame = pd.DataFrame(body, columns=header)
    for column in frame.columns:
        converted = pd.to_numeric(frame[column].replace("", float("nan")), errors="coerce")
        if converted.notna().sum() == (frame[column] != "").sum():
            frame[column] = converted
    return frame


def report_format(path: Path) -> ReportFormat:
    return "markdown" if path.suffix.lower() in (".md", ".markdown") else "csv"
