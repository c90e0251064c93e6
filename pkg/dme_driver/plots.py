"""Static SVG charts of loss curves and report metrics."""
from __future__ import annotations

import logging
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from .exceptions import ContractError  # noqa: E402

logger = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5) - 1.0) / 2.0
FIG_WIDTH = 6.0
LOSS_TERMS = ("imitation", "collision", "consistency", "total")


def plot_loss_curves(log: pd.DataFrame, path: Path) -> None:
    missing = {"epoch", *LOSS_TERMS} - set(log.columns)
    if missing:
        raise ContractError(f"loss log lacks columns {sorted(missing)}")
    fig, ax = plt.subplots(figsize=(FIG_WIDTH, FIG_WIDTH * GOLDEN))
    for term in LOSS_TERMS:
        ax.plot(log["epoch"], log[term], label=term)
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.set_yscale("symlog", linthresh=1e-3)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    logger.info(f"Wrote loss curves to {path}")


def plot_metric_bars(report: pd.DataFrame, path: Path) -> None:
    """One bar group per report row, one bar per numeric column."""
    numeric = report.select_dtypes("number")
    if numeric.empty:
        raise ContractError("report has no numeric columns to plot")
    labels = report["Method"] if "Method" in report.columns else [f"row {i + 1}" for i in range(len(report))]
    fig, ax = plt.subplots(figsize=(FIG_WIDTH, FIG_WIDTH * GOLDEN))
    width = 0.8 / len(numeric.columns)
    for offset, column in enumerate(numeric.columns):
        positions = [i + offset * width for i in range(len(report))]
        ax.bar(positions, numeric[column].fillna(0.0), width=width, label=column)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(report))])
    ax.set_xticklabels(labels, rotation=15, ha="right")
    ax.legend(frameon=False, fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    logger.info(f"Wrote metric bars to {path}")
