"""Matplotlib rendering of the report artifacts to image files.

Companion to the JSON/text report path: performance curves from a
training log, the error histogram, and the four confusion matrices.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluate import SPLIT_NAMES
from .train import EpochRecord

SPLIT_COLORS = {"training": "tab:blue", "validation": "tab:green", "test": "tab:red"}


def plot_performance(records: list[EpochRecord], path: str) -> None:
    """MSE per epoch for the three splits, log-scaled, best epoch marked."""
    epochs = [r.epoch for r in records]
    series = {
        "training": [r.train_mse for r in records],
        "validation": [r.validation_mse for r in records],
        "test": [r.test_mse for r in records],
    }
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name in SPLIT_NAMES:
        ax.semilogy(epochs, series[name], label=name, color=SPLIT_COLORS[name])
    best_i = int(np.argmin(series["validation"]))
    ax.axvline(epochs[best_i], ls="--", c="gray", lw=0.8)
    ax.plot(epochs[best_i], series["validation"][best_i], "o", c="gray", ms=5)
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean squared error")
    ax.set_title("network performance")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_error_histogram(histogram: dict, path: str) -> None:
    """Stacked per-split bar chart over the shared bin edges."""
    edges = np.asarray(histogram["bin_edges"])
    centers = 0.5 * (edges[:-1] + edges[1:])
    width = (edges[-1] - edges[0]) / max(len(centers), 1) * 0.9
    fig, ax = plt.subplots(figsize=(7, 4.5))
    bottom = np.zeros(len(centers))
    for name in SPLIT_NAMES:
        counts = np.asarray(histogram["counts"][name], dtype=float)
        ax.bar(
            centers, counts, width=width, bottom=bottom,
            label=name, color=SPLIT_COLORS[name],
        )
        bottom += counts
    ax.axvline(0.0, c="orange", lw=1.2)
    ax.set_xlabel("error (target - output)")
    ax.set_ylabel("frequency")
    ax.set_title("error histogram")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_confusion(report: dict, path: str) -> None:
    """2x2 grid of the four confusion matrices with counts and percentages."""
    class_order = report["class_order"]
    names = [*SPLIT_NAMES, "all"]
    fig, axes = plt.subplots(2, 2, figsize=(8, 8))
    for ax, name in zip(axes.ravel(), names):
        entry = report["confusion"][name]
        counts = np.asarray(entry["counts"])
        total = entry["total"]
        ax.imshow(counts, cmap="Blues")
        for i in range(2):
            for jcol in range(2):
                c = counts[i, jcol]
                ax.text(
                    jcol, i, f"{c}\n{100.0 * c / total:.1f}%",
                    ha="center", va="center",
                    color="white" if c > counts.max() / 2 else "black",
                )
        ax.set_xticks([0, 1], class_order)
        ax.set_yticks([0, 1], class_order)
        ax.set_xlabel("predicted")
        ax.set_ylabel("actual")
        ax.set_title(f"{name} ({entry['accuracy_percent']}%)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_all(
    report: dict, out_dir: str, records: list[EpochRecord] | None = None
) -> list[str]:
    """Write every available figure into out_dir; returns the file paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    path = os.path.join(out_dir, "confusion.png")
    plot_confusion(report, path)
    written.append(path)
    path = os.path.join(out_dir, "error_histogram.png")
    plot_error_histogram(report["histogram"], path)
    written.append(path)
    if records:
        path = os.path.join(out_dir, "performance.png")
        plot_performance(records, path)
        written.append(path)
    return written
