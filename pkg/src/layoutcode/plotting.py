"""Matplotlib figures written next to the evaluation and render outputs."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from .layout import Layout, to_corners  # noqa: E402
from .render import RenderStyle  # noqa: E402

METRICS = (("miou", "mIoU (↑)"), ("align", "Align. (→)"),
           ("overlap", "Overlap (→)"), ("fid", "FID (↓)"), ("fail_rate", "Fail (↓)"))


def plot_metric_panels(reports: Mapping[str, Mapping], path: str | Path) -> Path:
    """One bar panel per metric, one bar per task."""
    tasks = list(reports)
    fig, axes = plt.subplots(1, len(METRICS), figsize=(3.0 * len(METRICS), 3.2), facecolor="w")
    for ax, (key, label) in zip(axes, METRICS):
        vals = [reports[t].get(key) for t in tasks]
        heights = [v if v is not None else 0.0 for v in vals]
        bars = ax.bar(range(len(tasks)), heights, color="#4c72b0")
        for bar, v in zip(bars, vals):
            ax.annotate("n/a" if v is None else f"{v:.3g}", (bar.get_x() + bar.get_width() / 2, bar.get_height()),
                        ha="center", va="bottom", fontsize=8)
        if max(heights, default=0.0) <= 0.0:
            ax.set_ylim(0.0, 1.0)
        ax.set_xticks(range(len(tasks)))
        ax.set_xticklabels(tasks, rotation=30, ha="right", fontsize=8)
        ax.set_title(label, fontsize=10)
        ax.spines["top"].set_visible(False)
        ax.spines["right"].set_visible(False)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_layout_grid(layouts: Sequence[Layout], style: RenderStyle, path: str | Path,
                     ncols: int = 6, titles: Sequence[str] | None = None) -> Path:
    n = max(len(layouts), 1)
    ncols = min(ncols, n)
    nrows = math.ceil(n / ncols)
    fig, axes = plt.subplots(nrows, ncols, figsize=(2.0 * ncols, 2.6 * nrows), squeeze=False)
    for ax in axes.ravel():
        ax.axis("off")
    for i, layout in enumerate(layouts):
        ax = axes.ravel()[i]
        ax.add_patch(Rectangle((0, 0), layout.canvas_w, layout.canvas_h, fill=False, lw=0.8))
        for e in layout.elements:
            left, top, right, bottom = to_corners(e)
            c = style.color(e.category)
            ax.add_patch(Rectangle((left, top), right - left, bottom - top, facecolor=c,
                                   edgecolor=c, alpha=style.opacity, lw=0.6))
        ax.set_xlim(0, layout.canvas_w)
        ax.set_ylim(layout.canvas_h, 0)
        ax.set_aspect("equal")
        ax.set_title(titles[i] if titles else layout.source_id, fontsize=7)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path
