"""Classification metrics: confusion matrices, accuracy, error histograms,
and the per-period failure-rate trend report.

Confusion matrices are indexed rows = actual class, columns = predicted
class, over the model's class order; that layout is stated in every
rendered report header. An exact tie between the two output units is
classified as a failure (the conservative call for a go/no-go tool).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import nn
from .data import FAILURE, PERIOD_LABELS, Dataset
from .linalg import ShapeError

DEFAULT_HISTOGRAM_BINS = 20
SPLIT_NAMES = ("training", "validation", "test")


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # 2x2 ints, actual x predicted
    split: str
    class_order: list[str]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def correct(self) -> int:
        return int(np.trace(self.counts))


@dataclass
class Histogram:
    bin_edges: np.ndarray  # ascending, len = bins + 1
    counts: dict[str, np.ndarray]  # per split


def round_half_away(x: float, decimals: int = 1) -> float:
    scale = 10.0**decimals
    scaled = x * scale
    return (math.floor(scaled + 0.5) if scaled >= 0 else -math.floor(-scaled + 0.5)) / scale


def classify(net: nn.Network, raw_features: np.ndarray) -> tuple[str, np.ndarray]:
    """Predicted class label and the raw output vector for one sample.

    Inputs are raw feature scores; normalization uses the model's stored
    training statistics.
    """
    raw_features = np.asarray(raw_features, dtype=np.float64)
    if raw_features.shape != (net.layer_sizes[0],):
        raise ShapeError(
            f"input has {raw_features.shape[0] if raw_features.ndim == 1 else '?'} "
            f"features, model expects {net.layer_sizes[0]}"
        )
    out = nn.forward(net, net.normalize(raw_features)).output
    if out[0] == out[1]:
        return FAILURE, out
    return net.class_order[int(np.argmax(out))], out


def confusion_matrix(net: nn.Network, split: Dataset, label: str) -> ConfusionMatrix:
    if len(split) == 0:
        raise ValueError(f"empty split {label!r}")
    counts = np.zeros((2, 2), dtype=int)
    for s in split.samples:
        predicted, _ = classify(net, s.features)
        counts[net.class_order.index(s.label), net.class_order.index(predicted)] += 1
    return ConfusionMatrix(counts=counts, split=label, class_order=net.class_order)


def combine_matrices(matrices: list[ConfusionMatrix]) -> ConfusionMatrix:
    """Elementwise sum, used for the all-splits matrix."""
    total = np.sum([m.counts for m in matrices], axis=0)
    return ConfusionMatrix(
        counts=total, split="all", class_order=matrices[0].class_order
    )


def accuracy_percent(cm: ConfusionMatrix) -> float:
    """Percentage correct, rounded half away from zero to one decimal."""
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    return round_half_away(100.0 * cm.correct / cm.total)


def prediction_errors(net: nn.Network, split: Dataset) -> np.ndarray:
    """Per-output errors t - a pooled over all samples of a split.

    Negative values mean the output exceeded its target.
    """
    errs = []
    for s in split.samples:
        target = -np.ones(len(net.class_order))
        target[net.class_order.index(s.label)] = 1.0
        out = nn.forward(net, net.normalize(s.features)).output
        errs.extend(target - out)
    return np.array(errs)


def error_histogram(
    per_split_errors: dict[str, np.ndarray], bins: int = DEFAULT_HISTOGRAM_BINS
) -> Histogram:
    """Equal-width bins spanning the pooled error range of all splits."""
    pooled = np.concatenate([v for v in per_split_errors.values()])
    if pooled.size == 0:
        raise ValueError("no error values to bin")
    lo, hi = float(pooled.min()), float(pooled.max())
    if lo == hi:
        # degenerate: a single epsilon-wide bin centered at the value
        eps = max(abs(lo), 1.0) * 1e-12
        edges = np.linspace(lo - eps / 2, lo + eps / 2, 2)
    else:
        edges = np.linspace(lo, hi, bins + 1)
    counts = {
        name: np.histogram(vals, bins=edges)[0]
        for name, vals in per_split_errors.items()
    }
    return Histogram(bin_edges=edges, counts=counts)


def failure_rate_report(tallies: dict[int, tuple[int, int]]) -> list[dict]:
    """Per-period failure rates (percent, one decimal) from (S, F) tallies."""
    rows = []
    for period in sorted(tallies):
        n_s, n_f = tallies[period]
        total = n_s + n_f
        if total <= 0:
            raise ValueError(f"period {period} has no samples")
        rows.append(
            {
                "period": period,
                "years": PERIOD_LABELS.get(period, str(period)),
                "successes": n_s,
                "failures": n_f,
                "failure_rate_percent": round_half_away(100.0 * n_f / total),
            }
        )
    return rows


def build_report(
    net: nn.Network,
    splits: dict[str, Dataset],
    full_dataset: Dataset,
    bins: int = DEFAULT_HISTOGRAM_BINS,
) -> dict:
    """Assemble the full evaluation report (JSON-serializable).

    splits maps "training"/"validation"/"test" to their datasets.
    """
    matrices = {
        name: confusion_matrix(net, ds, name) for name, ds in splits.items()
    }
    all_cm = combine_matrices([matrices[n] for n in SPLIT_NAMES])
    matrices["all"] = all_cm
    histogram = error_histogram(
        {name: prediction_errors(net, splits[name]) for name in SPLIT_NAMES}, bins=bins
    )
    return {
        "layout": "confusion rows = actual class, columns = predicted class",
        "class_order": net.class_order,
        "confusion": {
            name: {
                "counts": cm.counts.tolist(),
                "total": cm.total,
                "correct": cm.correct,
                "accuracy_percent": accuracy_percent(cm),
            }
            for name, cm in matrices.items()
        },
        "histogram": {
            "bin_edges": histogram.bin_edges.tolist(),
            "counts": {k: v.tolist() for k, v in histogram.counts.items()},
        },
        "failure_rates": failure_rate_report(full_dataset.period_tallies()),
    }


def _render_confusion(name: str, entry: dict, class_order: list[str]) -> list[str]:
    counts = entry["counts"]
    total = entry["total"]
    width = 22
    lines = [f"{name} confusion matrix (n={total})"]
    header = " " * 12 + "".join(f"{'pred ' + c:>{width}}" for c in class_order)
    lines.append(header)
    for i, actual in enumerate(class_order):
        cells = []
        for jcol in range(len(class_order)):
            c = counts[i][jcol]
            pct = round_half_away(100.0 * c / total)
            cells.append(f"{f'{c} ({pct}%)':>{width}}")
        lines.append(f"{'act ' + actual:<12}" + "".join(cells))
    lines.append(f"accuracy: {entry['accuracy_percent']}%")
    return lines


def render_text(report: dict) -> str:
    """Fixed-width text rendering of the evaluation report."""
    lines = ["evaluation report", f"({report['layout']})", ""]
    for name in (*SPLIT_NAMES, "all"):
        lines.extend(_render_confusion(name, report["confusion"][name], report["class_order"]))
        lines.append("")
    lines.append("error histogram (e = target - output; negative: output too large)")
    edges = report["histogram"]["bin_edges"]
    counts = report["histogram"]["counts"]
    lines.append(
        f"{'bin':>24}" + "".join(f"{name:>12}" for name in SPLIT_NAMES)
    )
    for i in range(len(edges) - 1):
        span = f"[{edges[i]:+.3f},{edges[i + 1]:+.3f})"
        row = f"{span:>24}" + "".join(
            f"{counts[name][i]:>12}" for name in SPLIT_NAMES
        )
        lines.append(row)
    lines.append("")
    lines.append("failure-rate trend by period")
    lines.append(f"{'period':>12}{'successes':>12}{'failures':>12}{'rate %':>10}")
    for row in report["failure_rates"]:
        lines.append(
            f"{row['years']:>12}{row['successes']:>12}{row['failures']:>12}"
            f"{row['failure_rate_percent']:>10}"
        )
    lines.append("")
    lines.append(
        "note: rates are one-decimal percentages; truncating to integers gives "
        "the conventional whole-percent figures."
    )
    return "\n".join(lines) + "\n"
