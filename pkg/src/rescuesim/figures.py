"""Report figures rendered to files (headless matplotlib).

These sit next to the delimited/JSON outputs: a map view with tag truth
and estimates, and the exploration-time comparison chart.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .grid import FREE, OCCUPIED, OccupancyGrid

_MAP_GRAY = {OCCUPIED: 0.0, FREE: 1.0}


def _map_image(grid: OccupancyGrid) -> np.ndarray:
    img = np.full((grid.height, grid.width), 0.8)
    img[grid.cells == FREE] = _MAP_GRAY[FREE]
    img[grid.cells == OCCUPIED] = _MAP_GRAY[OCCUPIED]
    return img


def save_map_figure(
    grid: OccupancyGrid,
    path,
    tags_truth: list[tuple[float, float]] | None = None,
    tags_ckf: list[tuple[float, float]] | None = None,
    tags_last: list[tuple[float, float]] | None = None,
    goals: list[tuple[float, float]] | None = None,
    robot_xy: tuple[float, float] | None = None,
    title: str = "",
) -> None:
    x0, y0, x1, y1 = grid.world_extent()
    fig, ax = plt.subplots(figsize=(7, 7 * grid.height / max(1, grid.width)))
    ax.imshow(_map_image(grid), cmap="gray", vmin=0.0, vmax=1.0,
              origin="lower", extent=[x0, x1, y0, y1], interpolation="nearest")
    if goals:
        gx, gy = zip(*goals)
        ax.plot(gx, gy, "s-", color="tab:orange", ms=5, lw=0.8, label="sweep goals")
    if tags_truth:
        tx, ty = zip(*tags_truth)
        ax.plot(tx, ty, "o", color="tab:green", ms=7, mfc="none", label="tag truth")
    if tags_ckf:
        cx, cy = zip(*tags_ckf)
        ax.plot(cx, cy, "x", color="tab:blue", ms=6, label="filtered estimate")
    if tags_last:
        lx, ly = zip(*tags_last)
        ax.plot(lx, ly, "+", color="tab:red", ms=6, label="last measurement")
    if robot_xy is not None:
        ax.plot([robot_xy[0]], [robot_xy[1]], "^", color="tab:purple", ms=8, label="robot")
    if title:
        ax.set_title(title)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal")
    if tags_truth or tags_ckf or tags_last or goals or robot_xy:
        ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_error_figure(tag_results: dict[int, dict], path, title: str = "") -> None:
    """Grouped bars of per-tag localization error, filter vs baseline."""
    ids = sorted(t for t, v in tag_results.items() if "ckf_error" in v)
    fig, ax = plt.subplots(figsize=(7, 3.5))
    if ids:
        ckf = [tag_results[t]["ckf_error"] for t in ids]
        last = [tag_results[t]["last_error"] for t in ids]
        pos = np.arange(len(ids))
        ax.bar(pos - 0.2, ckf, width=0.4, label="filtered", color="tab:blue")
        ax.bar(pos + 0.2, last, width=0.4, label="last measurement", color="tab:red")
        ax.set_xticks(pos, [str(t) for t in ids])
        ax.legend(fontsize=8)
    ax.set_xlabel("tag id")
    ax.set_ylabel("position error [m]")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_compare_figure(rows: list[dict], path, title: str = "") -> None:
    """Exploration time per seed for each explorer, side by side."""
    explorers = sorted({r["explorer"] for r in rows})
    seeds = sorted({r["seed"] for r in rows})
    fig, ax = plt.subplots(figsize=(7, 3.5))
    width = 0.8 / max(1, len(explorers))
    pos = np.arange(len(seeds))
    for k, explorer in enumerate(explorers):
        times = []
        for seed in seeds:
            match = [r for r in rows if r["explorer"] == explorer and r["seed"] == seed]
            times.append(match[0]["exploration_time"] if match else np.nan)
        ax.bar(pos + (k - (len(explorers) - 1) / 2.0) * width, times,
               width=width, label=explorer)
    ax.set_xticks(pos, [str(s) for s in seeds])
    ax.set_xlabel("seed")
    ax.set_ylabel("exploration time [s]")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
