"""Ternary occupancy grid: coordinate transforms, ray casting, inflation,
and the inverse-sensor-model scan integrator used in place of full SLAM.

Cells are indexed as (x, y) with ``cells[y, x]`` storage. Cell (0, 0) has
its lower-left corner at the grid origin and its center at
``origin + (0.5, 0.5) * resolution``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

FREE = 0
OCCUPIED = 1
UNKNOWN = 2

# ROS map_saver gray levels for PGM export.
_PGM_LEVELS = {OCCUPIED: 0, FREE: 254, UNKNOWN: 205}

GridCell = tuple[int, int]
# Inclusive cell rectangle (min_x, min_y, max_x, max_y).
CellRect = tuple[int, int, int, int]


class GridBoundsError(ValueError):
    """A world point or cell index falls outside the grid."""


@dataclass
class OccupancyGrid:
    width: int
    height: int
    resolution: float
    origin: tuple[float, float] = (0.0, 0.0)
    cells: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.width}x{self.height}")
        if self.cells is None:
            self.cells = np.full((self.height, self.width), UNKNOWN, dtype=np.int8)
        else:
            self.cells = np.asarray(self.cells, dtype=np.int8)
            if self.cells.shape != (self.height, self.width):
                raise ValueError(
                    f"cells shape {self.cells.shape} does not match "
                    f"{self.height}x{self.width}"
                )

    def copy(self) -> "OccupancyGrid":
        return OccupancyGrid(
            self.width, self.height, self.resolution, self.origin, self.cells.copy()
        )

    def in_bounds(self, cell: GridCell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def __getitem__(self, cell: GridCell) -> int:
        return int(self.cells[cell[1], cell[0]])

    def __setitem__(self, cell: GridCell, state: int):
        self.cells[cell[1], cell[0]] = state

    def world_to_grid(self, p: tuple[float, float]) -> GridCell:
        """Map a world point to the cell containing it."""
        cx = math.floor((p[0] - self.origin[0]) / self.resolution)
        cy = math.floor((p[1] - self.origin[1]) / self.resolution)
        if not (0 <= cx < self.width and 0 <= cy < self.height):
            raise GridBoundsError(f"point {p} outside grid")
        return (cx, cy)

    def grid_to_world(self, cell: GridCell) -> tuple[float, float]:
        """World coordinates of a cell's center."""
        return (
            self.origin[0] + (cell[0] + 0.5) * self.resolution,
            self.origin[1] + (cell[1] + 0.5) * self.resolution,
        )

    def world_extent(self) -> tuple[float, float, float, float]:
        """(x_min, y_min, x_max, y_max) covered by the grid."""
        return (
            self.origin[0],
            self.origin[1],
            self.origin[0] + self.width * self.resolution,
            self.origin[1] + self.height * self.resolution,
        )

    def count(self, state: int) -> int:
        return int(np.count_nonzero(self.cells == state))


@dataclass
class LidarScan:
    """One 360-degree sweep. Beam i points at robot yaw + 2*pi*i/N;
    math.inf marks a no-return beam. Real sensors produce at least 8
    beams (enforced by the simulator); the container also accepts
    degenerate scans so callers can feed single test beams."""

    ranges: np.ndarray
    max_range: float

    def __post_init__(self):
        self.ranges = np.asarray(self.ranges, dtype=float)


def raycast(grid: OccupancyGrid, start: GridCell, end: GridCell) -> list[GridCell]:
    """All cells the center-to-center segment passes through, in order.

    This is a supercover walk: it reports every cell whose interior the
    segment crosses, stepping diagonally when the segment passes exactly
    through a cell corner. Consecutive cells are 8-adjacent and the walk
    is symmetric: raycast(a, b) equals raycast(b, a) reversed.
    """
    for c in (start, end):
        if not grid.in_bounds(c):
            raise GridBoundsError(f"cell {c} outside grid")
    return list(_supercover(start, end))


def _supercover(start: GridCell, end: GridCell):
    x, y = start
    x1, y1 = end
    dx = x1 - x
    dy = y1 - y
    sx = 1 if dx > 0 else -1
    sy = 1 if dy > 0 else -1
    adx = abs(dx)
    ady = abs(dy)
    yield (x, y)
    kx = ky = 1
    while (x, y) != (x1, y1):
        if adx == 0:
            y += sy
        elif ady == 0:
            x += sx
        else:
            # Next boundary crossings from the start center sit at
            # (k - 1/2)/adx and (k - 1/2)/ady; compare them exactly.
            cx = (2 * kx - 1) * ady
            cy = (2 * ky - 1) * adx
            if cx == cy:
                x += sx
                y += sy
                kx += 1
                ky += 1
            elif cx < cy:
                x += sx
                kx += 1
            else:
                y += sy
                ky += 1
        yield (x, y)


def inflate(grid: OccupancyGrid, radius: float) -> OccupancyGrid:
    """Grow OCCUPIED regions by a Euclidean radius (meters, on cell centers).

    The input grid is left untouched. UNKNOWN cells within the radius of an
    obstacle become OCCUPIED like everything else.
    """
    if radius < 0:
        raise ValueError("inflation radius must be non-negative")
    out = grid.copy()
    r_cells = radius / grid.resolution
    reach = int(math.floor(r_cells + 1e-9))
    occ = grid.cells == OCCUPIED
    if not occ.any():
        return out
    h, w = occ.shape
    grown = np.zeros_like(occ)
    limit = r_cells * r_cells + 1e-9
    for ox in range(-reach, reach + 1):
        for oy in range(-reach, reach + 1):
            if ox * ox + oy * oy > limit:
                continue
            src_x = slice(max(0, -ox), min(w, w - ox))
            src_y = slice(max(0, -oy), min(h, h - oy))
            dst_x = slice(max(0, ox), min(w, w + ox))
            dst_y = slice(max(0, oy), min(h, h + oy))
            grown[dst_y, dst_x] |= occ[src_y, src_x]
    out.cells[grown] = OCCUPIED
    return out


def march_indices(
    grid: OccupancyGrid,
    origin: tuple[float, float],
    angles: np.ndarray,
    t_values: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sample points along rays and return their cell indices.

    Returns (ix, iy, valid) arrays shaped (n_rays, n_samples); ``valid`` is
    False for samples outside the grid. Sample spacing should be at most
    half a cell so no crossed wall row is skipped.
    """
    angles = np.asarray(angles, dtype=float)
    xs = origin[0] + np.cos(angles)[:, None] * t_values[None, :]
    ys = origin[1] + np.sin(angles)[:, None] * t_values[None, :]
    ix = np.floor((xs - grid.origin[0]) / grid.resolution).astype(np.int64)
    iy = np.floor((ys - grid.origin[1]) / grid.resolution).astype(np.int64)
    valid = (ix >= 0) & (ix < grid.width) & (iy >= 0) & (iy < grid.height)
    return ix, iy, valid


def integrate_scan(
    grid: OccupancyGrid,
    robot_pose: tuple[float, float, float],
    scan: LidarScan,
) -> tuple[OccupancyGrid, CellRect | None]:
    """Fold one scan into the map with the standard inverse sensor model.

    Cells sampled along each beam short of the measured range become FREE,
    the cell containing each beam endpoint becomes OCCUPIED, and no-return
    beams mark FREE out to max_range. Within one scan the hit cells win
    over the free marks. Returns the updated grid and the tight bounding
    box of every cell whose state actually changed (None when nothing
    changed).
    """
    x, y, yaw = robot_pose
    grid.world_to_grid((x, y))  # robot must be inside the grid
    out = grid.copy()
    n = scan.ranges.size
    if n == 0:
        return out, None
    res = grid.resolution
    step = 0.5 * res
    angles = yaw + beam_angles(n)
    t_values = np.arange(0.0, scan.max_range + 0.5 * step, step)

    ix, iy, valid = march_indices(grid, (x, y), angles, t_values)
    ranges = np.where(np.isfinite(scan.ranges), scan.ranges, scan.max_range + res)
    free_mask = valid & (t_values[None, :] < (ranges[:, None] - 0.5 * res))

    flat = out.cells.ravel()
    touched: list[np.ndarray] = []
    free_idx = iy[free_mask] * grid.width + ix[free_mask]
    if free_idx.size:
        flat[free_idx] = FREE
        touched.append(free_idx)

    hit = np.isfinite(scan.ranges) & (scan.ranges <= scan.max_range)
    if hit.any():
        hx = x + np.cos(angles[hit]) * scan.ranges[hit]
        hy = y + np.sin(angles[hit]) * scan.ranges[hit]
        cx = np.floor((hx - grid.origin[0]) / res).astype(np.int64)
        cy = np.floor((hy - grid.origin[1]) / res).astype(np.int64)
        ok = (cx >= 0) & (cx < grid.width) & (cy >= 0) & (cy < grid.height)
        hit_idx = cy[ok] * grid.width + cx[ok]
        if hit_idx.size:
            flat[hit_idx] = OCCUPIED
            touched.append(hit_idx)

    if not touched:
        return out, None
    cand = np.unique(np.concatenate(touched))
    changed = cand[grid.cells.ravel()[cand] != flat[cand]]
    if changed.size == 0:
        return out, None
    cxs = changed % grid.width
    cys = changed // grid.width
    bbox = (int(cxs.min()), int(cys.min()), int(cxs.max()), int(cys.max()))
    return out, bbox


def beam_angles(n: int) -> np.ndarray:
    """Relative beam angles 2*pi*i/n for i in 0..n-1."""
    return 2.0 * np.pi * np.arange(n) / n


def to_pgm(grid: OccupancyGrid) -> bytes:
    """Binary PGM (P5, maxval 255): occupied 0, free 254, unknown 205.

    Rows are written top-down so the image matches the usual map viewers.
    """
    img = np.full((grid.height, grid.width), _PGM_LEVELS[UNKNOWN], dtype=np.uint8)
    img[grid.cells == FREE] = _PGM_LEVELS[FREE]
    img[grid.cells == OCCUPIED] = _PGM_LEVELS[OCCUPIED]
    header = f"P5\n{grid.width} {grid.height}\n255\n".encode("ascii")
    return header + img[::-1].tobytes()


def write_pgm(grid: OccupancyGrid, path) -> None:
    with open(path, "wb") as fh:
        fh.write(to_pgm(grid))
