"""Post-exploration search sweep.

The mapped free space (after obstacle inflation) is divided into a small
lattice sized by the cube root of the free area, one reachable point is
sampled per lattice cell, and the points are ordered in a snake pattern
so the robot sweeps the map with minimal backtracking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import FREE, OccupancyGrid
from .util import substream


class EmptyMapError(ValueError):
    """Coverage planning needs at least one free cell."""


@dataclass
class LatticeInfo:
    rows: int
    cols: int
    x_min: float
    y_min: float
    cell_w: float
    cell_h: float


@dataclass
class CoveragePlan:
    goals: list[tuple[float, float]]
    lattice_tags: list[tuple[int, int]]  # (row, col) per goal, same order
    cell_grid: LatticeInfo


def free_space_area(inflated: OccupancyGrid) -> float:
    """Free area in square meters of the inflated map."""
    n_free = inflated.count(FREE)
    if n_free == 0:
        raise EmptyMapError("no free cells after inflation")
    return n_free * inflated.resolution ** 2


def grid_divide_and_sample(
    grid: OccupancyGrid,
    inflated: OccupancyGrid,
    a_free: float,
    rng_seed: int,
    resample_cap: int = 20,
) -> tuple[list[tuple[float, float]], list[tuple[int, int]], LatticeInfo]:
    """One valid point per lattice cell over the free-space bounding box.

    The target cell count is round(a_free ** (1/3)) and the lattice is
    square: ceil(sqrt(N)) per side. Each cell tries its center first and
    then up to resample_cap uniform draws, accepting the first point FREE
    in both the raw and the inflated map; cells with no valid point are
    skipped.
    """
    if a_free <= 0:
        raise EmptyMapError("free area must be positive")
    free_cells = np.argwhere(inflated.cells == FREE)
    if free_cells.size == 0:
        raise EmptyMapError("no free cells after inflation")
    res = inflated.resolution
    y_lo, x_lo = free_cells.min(axis=0)
    y_hi, x_hi = free_cells.max(axis=0)
    x_min = inflated.origin[0] + x_lo * res
    y_min = inflated.origin[1] + y_lo * res
    x_max = inflated.origin[0] + (x_hi + 1) * res
    y_max = inflated.origin[1] + (y_hi + 1) * res

    n_cells = max(1, round(a_free ** (1.0 / 3.0)))
    side = math.ceil(math.sqrt(n_cells))
    lattice = LatticeInfo(
        rows=side,
        cols=side,
        x_min=float(x_min),
        y_min=float(y_min),
        cell_w=float(x_max - x_min) / side,
        cell_h=float(y_max - y_min) / side,
    )

    def usable(px: float, py: float) -> bool:
        try:
            cell = grid.world_to_grid((px, py))
        except ValueError:
            return False
        return grid[cell] == FREE and inflated[cell] == FREE

    points: list[tuple[float, float]] = []
    tags: list[tuple[int, int]] = []
    for row in range(side):
        for col in range(side):
            cx0 = lattice.x_min + col * lattice.cell_w
            cy0 = lattice.y_min + row * lattice.cell_h
            center = (cx0 + 0.5 * lattice.cell_w, cy0 + 0.5 * lattice.cell_h)
            chosen = None
            if usable(*center):
                chosen = center
            else:
                rng = substream(rng_seed, 2, row, col)
                for _ in range(resample_cap):
                    px = rng.uniform(cx0, cx0 + lattice.cell_w)
                    py = rng.uniform(cy0, cy0 + lattice.cell_h)
                    if usable(px, py):
                        chosen = (px, py)
                        break
            if chosen is not None:
                points.append((float(chosen[0]), float(chosen[1])))
                tags.append((row, col))
    if not points:
        raise EmptyMapError("no lattice cell produced a valid point")
    return points, tags, lattice


def snake_order(
    points: list[tuple[float, float]],
    tags: list[tuple[int, int]],
) -> tuple[list[tuple[float, float]], list[tuple[int, int]]]:
    """Boustrophedon ordering: rows ascending, columns alternating
    direction (even rows left to right)."""
    def key(item):
        (row, col), _ = item
        return (row, col if row % 2 == 0 else -col)

    ordered = sorted(zip(tags, points), key=key)
    return [p for _, p in ordered], [t for t, _ in ordered]


def plan_coverage(
    grid: OccupancyGrid,
    inflated: OccupancyGrid,
    rng_seed: int,
    resample_cap: int = 20,
) -> CoveragePlan:
    """Full pipeline: area estimate, lattice sampling, snake ordering."""
    area = free_space_area(inflated)
    points, tags, lattice = grid_divide_and_sample(
        grid, inflated, area, rng_seed, resample_cap=resample_cap
    )
    goals, ordered_tags = snake_order(points, tags)
    return CoveragePlan(goals=goals, lattice_tags=ordered_tags, cell_grid=lattice)


def coverage_debug_dump(plan: CoveragePlan) -> str:
    """Ordered goals with their lattice indices, one line each."""
    lines = [
        f"{i}\trow={r}\tcol={c}\tx={x:.3f}\ty={y:.3f}"
        for i, ((r, c), (x, y)) in enumerate(zip(plan.lattice_tags, plan.goals))
    ]
    return "\n".join(lines) + ("\n" if lines else "")
