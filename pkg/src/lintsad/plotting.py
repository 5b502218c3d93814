"""Matplotlib figures written next to the tabular outputs."""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "lintsad",  # stable SVG ids
    "svg.fonttype": "none",
}

LABEL_SHADE = "#f4b6c2"


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, bbox_inches="tight", metadata={"Date": None} if path.suffix == ".svg" else None)
    plt.close(fig)
    return path


def _shade_events(ax, labels: np.ndarray):
    edges = np.diff(np.concatenate([[0], labels, [0]]))
    for s, e in zip(np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)):
        ax.axvspan(s - 0.5, e - 0.5, color=LABEL_SHADE, alpha=0.6, lw=0)


def plot_scores(values: np.ndarray, scores: np.ndarray, path, labels: Optional[np.ndarray] = None,
                title: Optional[str] = None) -> Path:
    """Series on top, anomaly score below, label intervals shaded in both."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    t = np.arange(len(scores))
    with plt.rc_context(RC):
        fig, (ax0, ax1) = plt.subplots(2, 1, sharex=True, figsize=(7.0, 3.6),
                                       gridspec_kw={"height_ratios": [3, 2]})
        for j in range(values.shape[1]):
            ax0.plot(t, values[:, j], lw=0.8, color="k" if values.shape[1] == 1 else None)
        ax1.plot(t, scores, lw=0.8, color="#c0392b")
        if labels is not None:
            for ax in (ax0, ax1):
                _shade_events(ax, np.asarray(labels))
        ax0.set_ylabel("value")
        ax1.set_ylabel("score")
        ax1.set_xlabel("t")
        if title:
            ax0.set_title(title)
        fig.align_ylabels()
        return _save(fig, path)


def plot_metric_bars(report, path) -> Path:
    """One panel per metric; grouped bars per dataset, one bar per method."""
    ds, methods, metrics = report.datasets, report.methods, report.metrics
    x = np.arange(len(ds))
    width = 0.8 / max(len(methods), 1)
    with plt.rc_context(RC):
        fig, axes = plt.subplots(1, len(metrics), figsize=(3.0 * len(metrics), 2.8), squeeze=False)
        for ax, metric in zip(axes[0], metrics):
            for i, m in enumerate(methods):
                vals = []
                for d in ds:
                    c = report.cell(d, m)
                    vals.append(c.metrics[metric].f1 if not c.error and metric in c.metrics else np.nan)
                ax.bar(x + (i - (len(methods) - 1) / 2) * width, vals, width, label=m)
            ax.set_xticks(x)
            ax.set_xticklabels(ds, rotation=30, ha="right")
            ax.set_ylim(0, 1.05)
            ax.set_title(metric)
        axes[0][0].set_ylabel("score")
        axes[0][-1].legend(frameon=False, loc="lower right")
        fig.tight_layout()
        return _save(fig, path)


def plot_efficiency(report, path, metrics: Optional[Sequence[str]] = None) -> Path:
    """Mean score against total wall time; marker area follows model size."""
    metrics = list(metrics or report.metrics)
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.2, 3.2))
        for m in report.methods:
            cells = [report.cell(d, m) for d in report.datasets]
            ok = [c for c in cells if not c.error]
            if not ok:
                continue
            score = np.mean([np.mean([c.metrics[k].f1 for k in metrics]) for c in ok])
            secs = sum(c.seconds for c in ok)
            size_kb = np.mean([c.model_bytes for c in ok]) / 1024
            ax.scatter([secs], [score], s=30 + 20 * np.sqrt(size_kb), alpha=0.75)
            ax.annotate(f"{m} ({size_kb:.1f} KB)", (secs, score), textcoords="offset points", xytext=(5, 4))
        ax.set_xlabel("wall time, fit + score [s]")
        ax.set_ylabel("mean score")
        if np.isfinite([c.seconds for c in report.cells if not c.error]).all():
            ax.set_xscale("log")
        return _save(fig, path)


def plot_threshold_curve(thresholds: np.ndarray, f1: np.ndarray, path, title: Optional[str] = None) -> Path:
    finite = np.isfinite(thresholds)
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.2, 2.8))
        ax.plot(thresholds[finite], f1[finite], lw=1.0)
        ax.set_xscale("symlog")
        ax.set_xlabel("threshold")
        ax.set_ylabel("F1")
        if title:
            ax.set_title(title)
        return _save(fig, path)
