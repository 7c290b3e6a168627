"""Figures for evaluation reports: actual-vs-predicted scatter and importances.

Uses the non-interactive Agg backend; every function writes a file and closes
its figure.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_RC = {
    "font.size": 9,
    "axes.labelsize": 10,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "savefig.dpi": 150,
    "svg.hashsalt": "avqoe",  # stable SVG ids across runs
}


def figure_size(width=4.5, height=None):
    golden = (math.sqrt(5) - 1.0) / 2.0
    return (width, height if height else width * golden)


def plot_scatter(pairs, path, title=None, clamp=False):
    """Actual vs predicted MOS with the identity line.

    ``pairs`` holds ``(actual, predicted)`` values; predictions are clipped to
    [1, 5] only when ``clamp`` is set.
    """
    actual = [a for a, _ in pairs]
    pred = [min(5.0, max(1.0, p)) if clamp else p for _, p in pairs]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=figure_size(4.0, 4.0))
        ax.plot([1, 5], [1, 5], color="0.6", lw=0.8, ls="--", zorder=1)
        ax.scatter(actual, pred, s=9, alpha=0.35, lw=0, color="C0", zorder=2)
        ax.set_xlim(0.8, 5.2)
        ax.set_ylim(min(0.8, min(pred, default=1) - 0.2), max(5.2, max(pred, default=5) + 0.2))
        ax.set_xlabel("Actual MOS")
        ax.set_ylabel("Predicted MOS")
        if title:
            ax.set_title(title)
        ax.grid(True, lw=0.3, alpha=0.5)
        fig.tight_layout()
        return _save(fig, path)


def plot_importances(importances: dict, path, title="Forest feature importance"):
    items = sorted(importances.items(), key=lambda kv: kv[1])
    names = [k for k, _ in items]
    values = [v for _, v in items]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=figure_size(6.0, 0.3 * len(items) + 1.0))
        ax.barh(range(len(items)), values, color="C1")
        ax.set_yticks(range(len(items)))
        ax.set_yticklabels(names)
        ax.set_xlabel("Mean decrease in impurity (normalized)")
        ax.set_title(title)
        ax.grid(True, axis="x", lw=0.3, alpha=0.5)
        fig.tight_layout()
        return _save(fig, path)


def _save(fig, path):
    path = Path(path)
    try:
        # drop the timestamp so reruns produce identical files
        metadata = {"Date": None} if path.suffix.lower() in (".svg", ".pdf") else {"Software": None}
        fig.savefig(path, metadata=metadata)
    finally:
        plt.close(fig)
    return path
