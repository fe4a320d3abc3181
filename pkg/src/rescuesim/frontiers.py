"""Incremental frontier detection with a persistent visited layer.

Frontier cells (FREE cells with at least one UNKNOWN 4-neighbor) are kept
in an R-tree store. Each map update triggers a wavefront expansion seeded
from the previous frontier cells inside the observed region, so work per
update scales with what changed rather than with the whole map, plus a
revalidation sweep of the observed region that keeps the store exact even
when scan integration flips individual cells back and forth.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .grid import FREE, UNKNOWN, CellRect, GridCell, OccupancyGrid
from .spatial import RTreeIndex

FrontierStore = RTreeIndex

_NEIGHBORS4 = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass
class Frontier:
    centroid: tuple[float, float]
    size: int
    cells: list[GridCell]


@dataclass
class FrontierDelta:
    added: list[GridCell] = field(default_factory=list)
    removed: list[GridCell] = field(default_factory=list)

    def __bool__(self) -> bool:
        return bool(self.added or self.removed)


@dataclass
class ExplorationState:
    """Visited layer plus the frontier store, persistent across updates."""

    visited: np.ndarray
    store: RTreeIndex
    initialized: bool = False
    last_enqueued: int = 0  # instrumentation for the incremental-cost bound

    @classmethod
    def for_grid(cls, grid: OccupancyGrid, node_capacity: int = 16) -> "ExplorationState":
        return cls(
            visited=np.zeros((grid.height, grid.width), dtype=bool),
            store=RTreeIndex(node_capacity=node_capacity),
        )


def is_frontier_cell(grid: OccupancyGrid, cell: GridCell) -> bool:
    """FREE cell with an UNKNOWN 4-neighbor. Cells beyond the map edge do
    not count as unknown."""
    x, y = cell
    if grid.cells[y, x] != FREE:
        return False
    if x + 1 < grid.width and grid.cells[y, x + 1] == UNKNOWN:
        return True
    if x > 0 and grid.cells[y, x - 1] == UNKNOWN:
        return True
    if y + 1 < grid.height and grid.cells[y + 1, x] == UNKNOWN:
        return True
    if y > 0 and grid.cells[y - 1, x] == UNKNOWN:
        return True
    return False


def _frontier_mask(grid: OccupancyGrid, rect: CellRect) -> np.ndarray:
    """Frontier-status mask for the inclusive cell rectangle."""
    x0, y0, x1, y1 = rect
    cells = grid.cells
    # Pad with FREE so off-grid neighbors never register as unknown.
    window = np.full((y1 - y0 + 3, x1 - x0 + 3), FREE, dtype=np.int8)
    sy0, sy1 = max(0, y0 - 1), min(grid.height, y1 + 2)
    sx0, sx1 = max(0, x0 - 1), min(grid.width, x1 + 2)
    window[sy0 - (y0 - 1): sy1 - (y0 - 1), sx0 - (x0 - 1): sx1 - (x0 - 1)] = \
        cells[sy0:sy1, sx0:sx1]
    core = window[1:-1, 1:-1]
    unk = (
        (window[1:-1, 2:] == UNKNOWN)
        | (window[1:-1, :-2] == UNKNOWN)
        | (window[2:, 1:-1] == UNKNOWN)
        | (window[:-2, 1:-1] == UNKNOWN)
    )
    return (core == FREE) & unk


def _inflated(rect: CellRect, grid: OccupancyGrid) -> CellRect:
    x0, y0, x1, y1 = rect
    return (
        max(0, x0 - 1),
        max(0, y0 - 1),
        min(grid.width - 1, x1 + 1),
        min(grid.height - 1, y1 + 1),
    )


def ewfd_update(
    state: ExplorationState,
    grid: OccupancyGrid,
    observation_area: CellRect | None,
    robot_cell: GridCell,
) -> FrontierDelta:
    """Expanding-wavefront update after one scan integration.

    Seeds the BFS from the previous frontier cells inside the observation
    area (grown by one cell, since a cell's frontier status depends on its
    neighbors) plus the robot cell on the first call. The BFS walks only
    FREE cells not yet visited, marking them visited and evaluating each
    for frontier status. A final sweep revalidates the observed rectangle
    so the store stays exactly consistent with the current grid over the
    visited region.
    """
    if grid.cells[robot_cell[1], robot_cell[0]] != FREE:
        raise ValueError(f"robot cell {robot_cell} is not FREE")

    delta = FrontierDelta()
    area = _inflated(observation_area, grid) if observation_area else None
    visited = state.visited
    cells = grid.cells
    w, h = grid.width, grid.height

    queue: deque[GridCell] = deque()
    seen: set[GridCell] = set()
    if area is not None:
        for p in state.store.query(area):
            queue.append(p)
            seen.add(p)
    if not state.initialized:
        if robot_cell not in seen:
            queue.append(robot_cell)
            seen.add(robot_cell)
        visited[robot_cell[1], robot_cell[0]] = True
        state.initialized = True

    enqueued = len(queue)
    while queue:
        cx, cy = queue.popleft()
        if is_frontier_cell(grid, (cx, cy)):
            if state.store.insert((cx, cy)):
                delta.added.append((cx, cy))
        if cells[cy, cx] != FREE:
            continue
        for dx, dy in _NEIGHBORS4:
            nx, ny = cx + dx, cy + dy
            if 0 <= nx < w and 0 <= ny < h and not visited[ny, nx] \
                    and cells[ny, nx] == FREE:
                visited[ny, nx] = True
                queue.append((nx, ny))
                enqueued += 1
    state.last_enqueued = enqueued

    if area is not None:
        x0, y0, x1, y1 = area
        target = _frontier_mask(grid, area) & visited[y0:y1 + 1, x0:x1 + 1]
        for p in state.store.query(area):
            if not target[p[1] - y0, p[0] - x0]:
                state.store.remove(p)
                delta.removed.append(p)
        for ly, lx in np.argwhere(target):
            p = (int(lx) + x0, int(ly) + y0)
            if state.store.insert(p):
                delta.added.append(p)
    return delta


def revalidate_store(state: ExplorationState, grid: OccupancyGrid) -> list[GridCell]:
    """Drop every stored cell that no longer passes the frontier test.

    Run before each goal computation to bound staleness outside observed
    regions; returns the removed cells.
    """
    removed = [p for p in state.store if not is_frontier_cell(grid, p)]
    for p in removed:
        state.store.remove(p)
    return removed


def cluster_frontiers(
    store: RTreeIndex,
    grid: OccupancyGrid,
    min_frontier_size: int = 8,
) -> list[Frontier]:
    """Group frontier cells into 8-connected components.

    Components smaller than min_frontier_size are discarded. Output order
    follows the smallest cell of each component, so it is stable for a
    given store content.
    """
    remaining = set(store)
    frontiers: list[Frontier] = []
    for start in sorted(remaining):
        if start not in remaining:
            continue
        component = [start]
        remaining.discard(start)
        queue = deque([start])
        while queue:
            cx, cy = queue.popleft()
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    n = (cx + dx, cy + dy)
                    if n in remaining:
                        remaining.discard(n)
                        component.append(n)
                        queue.append(n)
        if len(component) < min_frontier_size:
            continue
        component.sort()
        centers = [grid.grid_to_world(c) for c in component]
        cx = sum(c[0] for c in centers) / len(centers)
        cy = sum(c[1] for c in centers) / len(centers)
        frontiers.append(Frontier(centroid=(cx, cy), size=len(component), cells=component))
    return frontiers


def frontier_debug_dump(frontiers: list[Frontier]) -> str:
    """One JSON object per line: id, centroid, size, cells."""
    lines = []
    for i, f in enumerate(frontiers):
        lines.append(json.dumps({
            "id": i,
            "centroid": [f.centroid[0], f.centroid[1]],
            "size": f.size,
            "cells": [list(c) for c in f.cells],
        }, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")
