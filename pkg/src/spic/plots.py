"""Figure rendering for the delimited outputs, file-based (Agg backend).

Each writer in this module is the visual sibling of one reporting artifact:
the per-run report bar chart, the sweep curve, the entropy histogram, and
the convergence curve. Figures are always optional extras; the delimited
files remain the canonical outputs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def sibling_figure_path(path) -> Path:
    """figure path next to a delimited output: same stem, .png suffix."""
    return Path(path).with_suffix(".png")


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def report_figure(report, path) -> Path:
    """Per-run samples as bars with the mean drawn across them."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    runs = np.arange(len(report.samples))
    ax.bar(runs, report.samples, color="#4878cf", label="per-run")
    ax.axhline(report.mean, color="#d65f5f", linestyle="--", label=f"mean {report.mean:.4f}")
    ax.set_xlabel("run")
    ax.set_ylabel(report.metric)
    ax.set_title(f"{report.model} on {report.dataset} (k={report.k})")
    ax.legend(loc="lower right")
    return _save(fig, path)


def sweep_figure(axis: str, xs, reports, path) -> Path:
    """Mean with a +-std band against the swept axis."""
    means = np.array([r.mean for r in reports])
    stds = np.array([r.std for r in reports])
    fig, ax = plt.subplots(figsize=(6, 3.5))
    if axis == "model_family":
        pos = np.arange(len(xs))
        ax.errorbar(pos, means, yerr=stds, fmt="o", capsize=4, color="#4878cf")
        ax.set_xticks(pos)
        ax.set_xticklabels([str(x) for x in xs], rotation=30, ha="right")
    else:
        ax.errorbar(xs, means, yerr=stds, fmt="o-", capsize=4, color="#4878cf")
    ax.set_xlabel(axis)
    ax.set_ylabel(reports[0].metric if reports else "metric")
    ax.set_title(f"sweep over {axis}")
    return _save(fig, path)


def entropy_figure(values, path, bins: int = 30) -> Path:
    """Histogram of per-node attention entropies."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.hist(np.asarray(values, dtype=np.float64), bins=bins, color="#4878cf", edgecolor="white")
    ax.set_xlabel("entropy (nats)")
    ax.set_ylabel("nodes")
    ax.set_title("neighborhood weight entropy")
    return _save(fig, path)


def convergence_figure(similarities, path) -> Path:
    """Cosine similarity to the dominant eigenvector against k."""
    sims = np.asarray(similarities, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(np.arange(sims.size), sims, "o-", color="#4878cf", markersize=3)
    ax.set_xlabel("k")
    ax.set_ylabel("cosine similarity")
    ax.set_ylim(min(0.0, sims.min()), 1.05)
    ax.set_title("power-iteration convergence")
    return _save(fig, path)
