"""Matplotlib figure rendering for the report paths.

Figures are written next to the delimited outputs: a switch-duration
histogram for eval runs, threshold heatmaps for sweeps, and a paired
baseline/corrected comparison for the suite.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_duration_histogram(events, path, tau_long=10):
    """Histogram of switch-event durations with the long-switch cutoff."""
    durations = [e.duration for e in events]
    fig, ax = plt.subplots(figsize=(6, 4))
    if durations:
        bins = np.arange(0.5, max(durations) + 1.5, 1.0)
        ax.hist(durations, bins=bins, color="#4878d0", edgecolor="white")
    ax.axvline(tau_long + 0.5, color="#d65f5f", linestyle="--",
               label=f"long-switch cutoff (> {tau_long})")
    ax.set_xlabel("switch duration (frames)")
    ax.set_ylabel("events")
    ax.set_title(f"identity-switch durations (n={len(durations)})")
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_sweep_heatmap(rows, x_key, y_key, metric, path):
    """Aggregate-row heatmap of `metric` over two swept parameters."""
    agg = [r for r in rows if r["scenario"] == "aggregate"]
    xs = sorted({r[x_key] for r in agg})
    ys = sorted({r[y_key] for r in agg})
    grid = np.full((len(ys), len(xs)), np.nan)
    for r in agg:
        grid[ys.index(r[y_key]), xs.index(r[x_key])] = r[metric]

    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.imshow(grid, origin="lower", aspect="auto", cmap="viridis")
    ax.set_xticks(range(len(xs)), [f"{x:g}" for x in xs])
    ax.set_yticks(range(len(ys)), [f"{y:g}" for y in ys])
    ax.set_xlabel(x_key)
    ax.set_ylabel(y_key)
    ax.set_title(f"suite-aggregate {metric}")
    for i in range(len(ys)):
        for j in range(len(xs)):
            if not np.isnan(grid[i, j]):
                ax.text(j, i, f"{grid[i, j]:.3f}", ha="center", va="center",
                        color="white", fontsize=8)
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_suite_comparison(baseline_agg, corrected_agg, path):
    """Bar chart of the suite aggregates, baseline vs corrected."""
    metrics = ["switch_mean", "switch_median", "long_ratio"]
    base = [getattr(baseline_agg, m) for m in metrics]
    corr = [getattr(corrected_agg, m) for m in metrics]
    x = np.arange(len(metrics))
    fig, (ax, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    width = 0.38
    ax.bar(x - width / 2, base, width, label="baseline", color="#bdbdbd")
    ax.bar(x + width / 2, corr, width, label="corrected", color="#4878d0")
    ax.set_xticks(x, ["mean", "median", "long ratio %"])
    ax.set_title("switch-duration statistics")
    ax.legend()

    ax2.bar([0 - width / 2, 1 - width / 2],
            [baseline_agg.idf1, baseline_agg.mota], width,
            label="baseline", color="#bdbdbd")
    ax2.bar([0 + width / 2, 1 + width / 2],
            [corrected_agg.idf1, corrected_agg.mota], width,
            label="corrected", color="#4878d0")
    ax2.set_xticks([0, 1], ["IDF1", "MOTA"])
    ax2.set_ylim(0, 1.05)
    ax2.set_title("accuracy aggregates")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
