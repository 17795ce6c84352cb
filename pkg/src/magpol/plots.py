"""Quick-look SVG renderings.  CSV files stay the source of truth; these are
for inspection only and are written byte-reproducibly."""
from __future__ import annotations

from pathlib import Path

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "magpol"
    return plt


def _save(fig, path):
    fig.savefig(Path(path), format="svg", metadata={"Date": None})


def plot_grid(path, grid, title="|S21|"):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    extent = [grid.field_axis[0] * 1e3, grid.field_axis[-1] * 1e3,
              grid.freq_axis[0] / 1e9, grid.freq_axis[-1] / 1e9]
    im = ax.imshow(np.abs(grid.values).T, origin="lower", aspect="auto", extent=extent, cmap="viridis")
    fig.colorbar(im, ax=ax, label=title)
    ax.set_xlabel("mu0 H (mT)")
    ax.set_ylabel("f (GHz)")
    _save(fig, path)
    plt.close(fig)


def plot_curves(path, x, curves, xlabel, ylabel, points=None):
    """Line plot of ``curves`` (label -> y array) over ``x``; optional scatter ``points``."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, y in curves.items():
        ax.plot(x, y, label=label)
    if points is not None:
        px, py = points
        ax.plot(px, py, ".", ms=3, color="k", label="data")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend()
    _save(fig, path)
    plt.close(fig)
