"""Report figures: convergence curve, front projections, strategy mix.

Rendered only on the report path, always to PNG files next to the CSV
output. The Agg backend is forced so rendering works headless.
"""

from __future__ import annotations

from itertools import combinations
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

AXIS_LABELS = {
    "val_mse": "validation MSE",
    "area": "area (um^2)",
    "power": "power (W)",
    "delay": "delay (ps)",
    "analytical_energy": "energy per inference (J)",
}


def _label(name: str) -> str:
    return AXIS_LABELS.get(name, name)


def render_report_figures(out_dir, rows, archive, front_records, objective_names) -> dict:
    """Write convergence.png, front.png and strategies.png; returns
    {figure name: path}."""
    out_dir = Path(out_dir)
    paths = {}
    paths["convergence_figure"] = _convergence_figure(out_dir / "convergence.png", rows)
    paths["front_figure"] = _front_figure(out_dir / "front.png", archive, objective_names)
    paths["strategies_figure"] = _strategy_figure(out_dir / "strategies.png", front_records)
    return paths


def _convergence_figure(path: Path, rows) -> Path:
    idx = [row["trial_index"] for row in rows]
    hv = [row["hypervolume"] for row in rows]
    size = [row["front_size"] for row in rows]
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.step(idx, hv, where="post", color="tab:blue", label="hypervolume")
    ax.set_xlabel("trial")
    ax.set_ylabel("dominated hypervolume", color="tab:blue")
    ax.tick_params(axis="y", labelcolor="tab:blue")
    twin = ax.twinx()
    twin.step(idx, size, where="post", color="tab:orange", alpha=0.7, label="front size")
    twin.set_ylabel("front size", color="tab:orange")
    twin.tick_params(axis="y", labelcolor="tab:orange")
    ax.set_title("search convergence")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _front_figure(path: Path, archive, objective_names) -> Path:
    pts = archive.objectives
    names = list(objective_names)
    pairs = list(combinations(range(len(names)), 2))
    ncols = min(3, len(pairs))
    nrows = (len(pairs) + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(4.0 * ncols, 3.4 * nrows), squeeze=False)
    for k, (i, j) in enumerate(pairs):
        ax = axes[k // ncols][k % ncols]
        ax.scatter(pts[:, i], pts[:, j], s=22, color="tab:blue", edgecolor="black", linewidth=0.4)
        ax.set_xlabel(_label(names[i]))
        ax.set_ylabel(_label(names[j]))
        if np.all(pts[:, i] > 0) and pts[:, i].max() / pts[:, i].min() > 50:
            ax.set_xscale("log")
        if np.all(pts[:, j] > 0) and pts[:, j].max() / pts[:, j].min() > 50:
            ax.set_yscale("log")
    for k in range(len(pairs), nrows * ncols):
        axes[k // ncols][k % ncols].set_visible(False)
    fig.suptitle("Pareto front projections")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _strategy_figure(path: Path, front_records) -> Path:
    counts: dict[str, int] = {}
    for rec in front_records:
        name = rec.design.strategy.name
        counts[name] = counts.get(name, 0) + 1
    names = sorted(counts)
    fig, ax = plt.subplots(figsize=(6.0, 3.2))
    ax.bar(range(len(names)), [counts[n] for n in names], color="tab:green")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=45, ha="right")
    ax.set_ylabel("front designs")
    ax.set_title("synthesis strategies on the front")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
