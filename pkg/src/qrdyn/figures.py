"""Matplotlib renderings written next to the delimited outputs.

Every report-producing CLI path drops a PNG alongside its PGM/CSV/JSON so a
run can be eyeballed without extra tooling.  Figures carry no timestamps and
render identically across reruns.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .grids import Grid  # noqa: E402

_SAVE_KW = {"dpi": 130, "metadata": {"Software": None}}


def _finish(fig, path: Path) -> Path:
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return Path(path)


def render_grid(grid: Grid, path: Path, title: str = "") -> Path:
    img, _ = _grid_image(grid)
    fig, ax = plt.subplots(figsize=(6, 6))
    w = grid.window
    ax.imshow(img, origin="lower", extent=(w[0], w[1], w[2], w[3]),
              cmap="viridis", interpolation="nearest")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    return _finish(fig, path)


def _grid_image(grid: Grid):
    lab = grid.labels_nd()
    if grid.dimension == 3:
        lab = lab[:, :, lab.shape[2] // 2]
    return lab.T, None


def render_points(points, path: Path, window=None, title: str = "") -> Path:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    fig, ax = plt.subplots(figsize=(6, 6))
    if pts.shape[1] >= 2:
        ax.plot(pts[:, 0], pts[:, 1], ".", markersize=1.0, color="#203864")
    if window:
        ax.set_xlim(window[0], window[1])
        ax.set_ylim(window[2], window[3])
    ax.set_aspect("equal", adjustable="box")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    return _finish(fig, path)


def render_boxdim(scales, counts, slope, path: Path) -> Path:
    logs = np.log(1.0 / np.asarray(scales, dtype=float))
    logn = np.log(np.asarray(counts, dtype=float))
    coef = np.polyfit(logs, logn, 1)
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.plot(logs, logn, "o", color="#203864", label="occupied boxes")
    ax.plot(logs, np.polyval(coef, logs), "-", color="#a33", label=f"slope {slope:.4f}")
    ax.set_xlabel("log(1/size)")
    ax.set_ylabel("log(count)")
    ax.legend()
    return _finish(fig, path)


def render_pits(report, samples_by_R: dict, path: Path) -> Path:
    fig, axes = plt.subplots(1, 2, figsize=(10, 4.5))
    for R, pts in samples_by_R.items():
        if pts.size:
            axes[0].plot(pts[:, 0], pts[:, 1], ".", markersize=1.5, label=f"R={R:g}")
    axes[0].set_aspect("equal", adjustable="box")
    axes[0].set_title("sublevel samples")
    if samples_by_R:
        axes[0].legend(fontsize=7, markerscale=4)
    rs = report.radii_tested
    axes[1].plot(rs, [report.cover_counts[R]["upper"] for R in rs], "o-", label="cover upper bound")
    axes[1].plot(rs, [report.cover_counts[R]["witness"] for R in rs], "s-", label="separated witness")
    axes[1].axhline(report.N_used, color="#a33", linestyle="--", label=f"N = {report.N_used}")
    axes[1].set_xscale("log")
    axes[1].set_xlabel("R")
    axes[1].set_ylabel("ball count")
    axes[1].set_title(f"verdict: {report.verdict}")
    axes[1].legend(fontsize=8)
    fig.tight_layout()
    return _finish(fig, path)


def render_potential(u, window, path: Path, title: str = "condenser potential") -> Path:
    field = np.asarray(u)
    if field.ndim == 3:
        field = field[:, :, field.shape[2] // 2]
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.imshow(field.T, origin="lower",
                   extent=(window[0], window[1], window[2], window[3]),
                   cmap="magma", interpolation="nearest")
    fig.colorbar(im, ax=ax, label="u")
    ax.set_title(title)
    return _finish(fig, path)


def render_histogram(values, path: Path, xlabel: str, title: str = "") -> Path:
    vals = np.asarray(values, dtype=float)
    vals = vals[np.isfinite(vals)]
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.hist(vals, bins=40, color="#203864")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("count")
    if title:
        ax.set_title(title)
    return _finish(fig, path)
