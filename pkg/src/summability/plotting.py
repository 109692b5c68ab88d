"""Figure rendering for CLI reports. Import stays local to report paths."""

from __future__ import annotations

import os
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _finish(fig, path: str | os.PathLike) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def scatter(
    path: str | os.PathLike,
    x: Sequence[float],
    y: Sequence[float],
    xlabel: str,
    ylabel: str,
    title: str = "",
) -> str:
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.scatter(x, y, s=18, alpha=0.7, edgecolors="none")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(True, linewidth=0.3, alpha=0.5)
    return _finish(fig, path)


def histogram_grid(path: str | os.PathLike, columns: Mapping[str, Sequence[float]]) -> str:
    names = list(columns)
    cols = min(3, max(1, len(names)))
    rows = (len(names) + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(3.2 * cols, 2.6 * rows), squeeze=False)
    for i, name in enumerate(names):
        ax = axes[i // cols][i % cols]
        ax.hist(list(columns[name]), bins=20, color="#4878a8")
        ax.set_title(name, fontsize=9)
    for j in range(len(names), rows * cols):
        axes[j // cols][j % cols].axis("off")
    return _finish(fig, path)


def heatmap(
    path: str | os.PathLike,
    matrix: np.ndarray,
    labels: Sequence[str],
    title: str = "",
) -> str:
    fig, ax = plt.subplots(figsize=(1.0 + 0.5 * len(labels), 0.8 + 0.5 * len(labels)))
    im = ax.imshow(matrix, vmin=-1.0, vmax=1.0, cmap="RdBu_r")
    ax.set_xticks(range(len(labels)), labels, rotation=45, ha="right", fontsize=8)
    ax.set_yticks(range(len(labels)), labels, fontsize=8)
    fig.colorbar(im, ax=ax, shrink=0.8)
    if title:
        ax.set_title(title)
    return _finish(fig, path)


def bar_pairs(
    path: str | os.PathLike,
    labels: Sequence[str],
    values: Sequence[float],
    ylabel: str,
    title: str = "",
) -> str:
    fig, ax = plt.subplots(figsize=(1.0 + 0.9 * len(labels), 3.5))
    ax.bar(range(len(labels)), values, color="#4878a8")
    ax.set_xticks(range(len(labels)), labels, rotation=20, ha="right", fontsize=9)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    return _finish(fig, path)
