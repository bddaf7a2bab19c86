"""Matplotlib figures rendered next to the delimited output of each report."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

__all__ = [
    "save_line_plot",
    "save_histogram",
    "save_node_ratios",
    "save_heatmap",
]

_FIGSIZE = (6.4, 4.0)


def _finish(fig, ax, path: Path, xlabel: str, ylabel: str, title: str) -> Path:
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_line_plot(
    path: Path,
    x,
    series: dict[str, list],
    xlabel: str,
    ylabel: str,
    title: str,
    logx: bool = False,
) -> Path:
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for label, ys in series.items():
        style = "--" if label.startswith("bound") else "-o"
        ax.plot(x, ys, style, label=label, markersize=4)
    if logx:
        ax.set_xscale("log", base=2)
    ax.legend()
    return _finish(fig, ax, path, xlabel, ylabel, title)


def save_histogram(path: Path, values, xlabel: str, title: str, bins: int = 40) -> Path:
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.hist(values, bins=bins, color="steelblue", alpha=0.85)
    return _finish(fig, ax, path, xlabel, "count", title)


def save_node_ratios(path: Path, xs, ratios, xlabel: str, title: str) -> Path:
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(xs, ratios, "o", markersize=4, color="steelblue")
    ax.axhline(1.0, color="crimson", linestyle="--", linewidth=1, label="bound 1")
    ax.legend()
    return _finish(fig, ax, path, xlabel, "testing ratio", title)


def save_heatmap(path: Path, xs, ys, grid, xlabel: str, ylabel: str, title: str) -> Path:
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    mesh = ax.pcolormesh(xs, ys, grid, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax)
    return _finish(fig, ax, path, xlabel, ylabel, title)
