"""Headless matplotlib figures for reports and evaluation output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiment import ResultRow
from .framestack import TurnStrategy
from .ingest import Dimension
from .metrics import Scaling
from .report import SCALING_LABELS


def ccc_bar_charts(rows: list[ResultRow], out_dir: str | Path) -> list[Path]:
    """One grouped bar chart of dev CCC per affect dimension.

    Bars are grouped by turn strategy; one series per (features, scaling)
    pair. Missing cells are simply not drawn.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scaling_order = {scaling: i for i, scaling in enumerate(Scaling)}
    paths: list[Path] = []
    for dim in Dimension:
        dim_rows = [r for r in rows if r.dimension is dim]
        if not dim_rows:
            continue
        turns = [t for t in TurnStrategy if any(r.turn_strategy is t for r in dim_rows)]
        series = sorted(
            {(r.features, r.scaling) for r in dim_rows},
            key=lambda fs: (fs[0], scaling_order[fs[1]]),
        )
        lookup = {(r.features, r.turn_strategy, r.scaling): r.ccc_dev for r in dim_rows}
        x = np.arange(len(turns))
        width = 0.8 / len(series)
        fig, ax = plt.subplots(figsize=(8.0, 4.5))
        for i, (features, scaling) in enumerate(series):
            heights = [
                lookup.get((features, turn, scaling), np.nan) for turn in turns
            ]
            offset = (i - (len(series) - 1) / 2.0) * width
            ax.bar(x + offset, heights, width, label=f"{features}, {SCALING_LABELS[scaling]}")
        ax.axhline(0.0, color="black", linewidth=0.6)
        ax.set_xticks(x)
        ax.set_xticklabels([t.value for t in turns])
        ax.set_ylabel("dev CCC")
        ax.set_title(dim.value)
        ax.legend(fontsize=7)
        fig.tight_layout()
        path = out_dir / f"ccc_dev_{dim.value.lower()}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths


def prediction_overlay(
    gold: np.ndarray,
    pred: np.ndarray,
    rate_period: float,
    path: str | Path,
    title: str = "Prediction vs gold",
) -> Path:
    """Line overlay of predictions against the gold track."""
    gold = np.asarray(gold, dtype=np.float64).ravel()
    pred = np.asarray(pred, dtype=np.float64).ravel()
    t = np.arange(gold.size) * rate_period
    fig, ax = plt.subplots(figsize=(8.0, 3.0))
    ax.plot(t, gold, label="gold", linewidth=1.0)
    ax.plot(t[: pred.size], pred, label="prediction", linewidth=1.0)
    ax.set_xlabel("seconds (sessions concatenated)")
    ax.set_ylabel("affect value")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def loss_curve(history: list[float], path: str | Path, title: str = "Training loss") -> Path:
    fig, ax = plt.subplots(figsize=(6.0, 3.0))
    ax.plot(np.arange(1, len(history) + 1), history, marker="o", markersize=3)
    ax.set_xlabel("epoch")
    ax.set_ylabel("MSE")
    ax.set_title(title)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
