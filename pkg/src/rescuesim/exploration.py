"""Exploration goal selection.

Two strategies share the frontier input: the sampled next-best-view
planner (score candidate poses by unknown area visible per travel second)
and the greedy baseline that walks to the cheapest frontier centroid
using a distance-minus-size cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .frontiers import Frontier
from .grid import FREE, OCCUPIED, UNKNOWN, OccupancyGrid
from .tags import RobotPose
from .util import substream, wrap_angle, wrap_angles

_FOV_EDGE_TOL = 1e-9


class NoCandidatesError(RuntimeError):
    """No usable exploration goal; callers treat this as a completion check."""


@dataclass
class MotionLimits:
    v_max: float = 0.22
    omega_max: float = 2.84

    def __post_init__(self):
        if self.v_max <= 0 or self.omega_max <= 0:
            raise ValueError("velocity limits must be positive")


@dataclass
class ExplorationConfig:
    num_samples: int = 50
    sampling_radius: float = 1.0
    n_rays: int = 72
    sensor_max_range: float = 7.0
    sensor_fov: tuple[float, float] = (-math.radians(70.0), math.radians(70.0))
    goal_request_period: float = 3.0
    # A new goal must beat the active goal's re-evaluated potential gain
    # by this factor; damps oscillation from per-request sampling jitter.
    goal_hysteresis: float = 1.5

    def __post_init__(self):
        if self.num_samples < 1:
            raise ValueError("num_samples must be at least 1")
        if self.n_rays < 8:
            raise ValueError("n_rays must be at least 8")
        lo, hi = self.sensor_fov
        if not (-math.pi < lo <= hi <= math.pi):
            raise ValueError("sensor_fov must be an interval inside (-pi, pi]")


@dataclass
class RayGainTable:
    angles: np.ndarray
    unknown_counts: np.ndarray
    gains: np.ndarray  # meters of unknown cells per ray


@dataclass
class CandidateGoal:
    position: tuple[float, float]
    orientation: float
    info_gain: float
    time_cost: float
    potential_gain: float = field(init=False)

    def __post_init__(self):
        self.potential_gain = potential_gain(self.info_gain, self.time_cost)


def potential_gain(info_gain: float, time_cost: float) -> float:
    """I/T with the degenerate cases pinned: zero information is worth
    nothing however cheap, and free information at zero cost is infinitely
    attractive."""
    if info_gain <= 0.0:
        return 0.0
    if time_cost == 0.0:
        return math.inf
    return info_gain / time_cost


_RAY_TABLES: dict = {}


def _ray_tables(n_rays: int, max_range: float, res: float):
    key = (n_rays, max_range, res)
    cached = _RAY_TABLES.get(key)
    if cached is None:
        angles = 2.0 * np.pi * np.arange(n_rays) / n_rays
        ts = np.arange(0.0, max_range + 0.5 * res, res)
        cached = (np.cos(angles), np.sin(angles), ts)
        _RAY_TABLES[key] = cached
    return cached


def ray_gain_counts(
    grid: OccupancyGrid,
    positions: np.ndarray,
    config: ExplorationConfig,
) -> np.ndarray:
    """Unknown-cell counts per ray for a batch of positions.

    Rays are walked by sampling every map resolution along each of the
    n_rays directions; a ray stops at the first OCCUPIED cell and at the
    map border. Returns an integer array shaped (len(positions), n_rays).
    """
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    res = grid.resolution
    cos_a, sin_a, ts = _ray_tables(config.n_rays, config.sensor_max_range, res)
    xs = positions[:, 0, None, None] + cos_a[None, :, None] * ts[None, None, :]
    ys = positions[:, 1, None, None] + sin_a[None, :, None] * ts[None, None, :]
    ix = np.floor((xs - grid.origin[0]) / res).astype(np.int32)
    iy = np.floor((ys - grid.origin[1]) / res).astype(np.int32)
    valid = (ix >= 0) & (ix < grid.width) & (iy >= 0) & (iy < grid.height)
    flat = np.where(valid, iy * grid.width + ix, 0)
    state = grid.cells.ravel()[flat]
    occupied = valid & (state == OCCUPIED)
    blocked = np.logical_or.accumulate(occupied, axis=2)
    # Count only the first sample of each new cell, so shallow diagonal
    # runs are not double-counted.
    fresh = np.empty_like(valid)
    fresh[:, :, 0] = True
    fresh[:, :, 1:] = (ix[:, :, 1:] != ix[:, :, :-1]) | (iy[:, :, 1:] != iy[:, :, :-1])
    unknown = valid & (state == UNKNOWN)
    counts = (fresh & unknown & ~blocked).sum(axis=2)
    return counts.astype(np.int64)


def compute_ray_gains(
    grid: OccupancyGrid,
    position: tuple[float, float],
    config: ExplorationConfig,
) -> RayGainTable:
    """Per-ray information gain around one position."""
    grid.world_to_grid(position)
    counts = ray_gain_counts(grid, np.array([position]), config)[0]
    angles = wrap_angles(2.0 * np.pi * np.arange(config.n_rays) / config.n_rays)
    return RayGainTable(
        angles=angles,
        unknown_counts=counts,
        gains=counts * grid.resolution,
    )


def _fov_offsets(n_rays: int, fov: tuple[float, float]) -> np.ndarray:
    """Ray index offsets whose relative angle falls inside the fov."""
    rel = wrap_angles(2.0 * np.pi * np.arange(n_rays) / n_rays)
    inside = (rel >= fov[0] - _FOV_EDGE_TOL) & (rel <= fov[1] + _FOV_EDGE_TOL)
    return np.nonzero(inside)[0]


def windowed_gains(gains: np.ndarray, n_rays: int, fov: tuple[float, float]) -> np.ndarray:
    """Summed gain for each candidate orientation (one per ray direction).

    gains may be (n_rays,) or (batch, n_rays); the output has the same
    leading shape.
    """
    offsets = _fov_offsets(n_rays, fov)
    idx = (np.arange(n_rays)[:, None] + offsets[None, :]) % n_rays
    g = np.atleast_2d(gains)
    sums = g[:, idx].sum(axis=2)
    return sums[0] if np.ndim(gains) == 1 else sums


_GAIN_TIE_TOL = 1e-9


def argmax_with_ties(sums: np.ndarray) -> int:
    """First index whose value is within a hair of the maximum.

    Window sums that are mathematically equal can differ in the last few
    ulps depending on summation order, so ties are resolved with a small
    absolute tolerance before falling back to the smallest angle.
    """
    return int(np.argmax(sums >= sums.max() - _GAIN_TIE_TOL))


def optimal_orientation(rays: RayGainTable, fov: tuple[float, float]) -> tuple[float, float]:
    """Orientation maximizing the in-fov gain sum, with ties (exact or
    within 1e-9) going to the smallest non-negative angle. Returns
    (theta, summed gain)."""
    n = rays.gains.size
    if n == 0:
        raise ValueError("empty ray table")
    sums = windowed_gains(rays.gains, n, fov)
    best = argmax_with_ties(sums)
    return wrap_angle(2.0 * math.pi * best / n), float(sums[best])


def time_cost(
    goal: tuple[tuple[float, float], float],
    robot: RobotPose,
    limits: MotionLimits,
) -> float:
    """Optimistic travel time: max of the rotation and the straight-line
    translation at the velocity limits."""
    (gx, gy), gtheta = goal
    rot = abs(wrap_angle(gtheta - robot.yaw)) / limits.omega_max
    trans = math.hypot(gx - robot.x, gy - robot.y) / limits.v_max
    return max(rot, trans)


def sample_candidates(
    grid: OccupancyGrid,
    frontiers: list[Frontier],
    robot: RobotPose,
    config: ExplorationConfig,
    limits: MotionLimits,
    rng_seed: int,
) -> list[CandidateGoal]:
    """Draw and score candidate poses around every frontier centroid.

    Up to num_samples points are accepted per frontier from a square of
    half-width sampling_radius, rejecting draws that do not land on a FREE
    cell, with a cap of 10x num_samples draws. Each frontier consumes its
    own RNG substream, so results are reproducible regardless of frontier
    count.
    """
    if not frontiers:
        raise NoCandidatesError("no frontiers to sample around")
    res = grid.resolution
    candidates: list[CandidateGoal] = []
    for idx, frontier in enumerate(frontiers):
        rng = substream(rng_seed, 1, idx)
        cx, cy = frontier.centroid
        draws = rng.uniform(-config.sampling_radius, config.sampling_radius,
                            size=(10 * config.num_samples, 2))
        points = draws + (cx, cy)
        gx = np.floor((points[:, 0] - grid.origin[0]) / res).astype(np.int64)
        gy = np.floor((points[:, 1] - grid.origin[1]) / res).astype(np.int64)
        ok = (gx >= 0) & (gx < grid.width) & (gy >= 0) & (gy < grid.height)
        ok[ok] = grid.cells[gy[ok], gx[ok]] == FREE
        accepted = points[ok][: config.num_samples]
        if accepted.shape[0] == 0:
            continue
        counts = ray_gain_counts(grid, accepted, config)
        sums = windowed_gains(counts * res, config.n_rays, config.sensor_fov)
        best = np.argmax(sums >= sums.max(axis=1, keepdims=True) - 1e-9, axis=1)
        for row, point in enumerate(accepted):
            theta = wrap_angle(2.0 * math.pi * int(best[row]) / config.n_rays)
            gain = float(sums[row, best[row]])
            cost = time_cost(((point[0], point[1]), theta), robot, limits)
            candidates.append(CandidateGoal(
                position=(float(point[0]), float(point[1])),
                orientation=theta,
                info_gain=gain,
                time_cost=cost,
            ))
    if not candidates:
        raise NoCandidatesError("no reachable candidates around any frontier")
    return candidates


def evaluate_pose_gain(
    grid: OccupancyGrid,
    position: tuple[float, float],
    orientation: float,
    robot: RobotPose,
    config: ExplorationConfig,
    limits: MotionLimits,
) -> CandidateGoal:
    """Re-score a fixed pose with the current map (used to decide whether
    an active goal is still worth keeping)."""
    counts = ray_gain_counts(grid, np.array([position]), config)[0]
    sums = windowed_gains(counts * grid.resolution, config.n_rays, config.sensor_fov)
    # Gain at the nearest discretized orientation.
    idx = int(round((orientation % (2.0 * math.pi)) / (2.0 * math.pi / config.n_rays)))
    gain = float(sums[idx % config.n_rays])
    cost = time_cost((position, orientation), robot, limits)
    return CandidateGoal(position=position, orientation=orientation,
                         info_gain=gain, time_cost=cost)


def select_goal(candidates: list[CandidateGoal]) -> CandidateGoal:
    """Highest potential gain; ties fall back to lower time cost, then to
    lexicographically smallest position."""
    if not candidates:
        raise NoCandidatesError("empty candidate list")
    return max(
        candidates,
        key=lambda c: (
            c.potential_gain,
            -c.time_cost,
            -c.position[0],
            -c.position[1],
        ),
    )


def candidate_debug_dump(candidates: list[CandidateGoal]) -> str:
    """One line per candidate: position, orientation, information gain,
    time cost, potential gain. For plotting goal-selection snapshots."""
    lines = [
        f"x={c.position[0]:.3f}\ty={c.position[1]:.3f}\ttheta={c.orientation:.4f}"
        f"\tinfo_gain={c.info_gain:.4f}\ttime_cost={c.time_cost:.4f}"
        f"\tpotential_gain={c.potential_gain:.6g}"
        for c in candidates
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def greedy_baseline_goal(
    frontiers: list[Frontier],
    robot: RobotPose,
    grid: OccupancyGrid,
    potential_scale: float = 4.0,
    gain_scale: float = 1.0,
    blacklist: list[tuple[float, float]] | None = None,
    blacklist_radius: float = 0.3,
) -> tuple[float, float]:
    """Centroid of the cheapest frontier, explore_lite style.

    Cost is potential_scale * distance to the closest frontier cell minus
    gain_scale * frontier size (in cells). Frontiers whose centroid sits
    within blacklist_radius of a blacklisted goal are skipped. The goal
    orientation is left at zero by convention.
    """
    blacklist = blacklist or []
    best_cost = None
    best_centroid = None
    for frontier in frontiers:
        fx, fy = frontier.centroid
        if any(math.hypot(fx - bx, fy - by) <= blacklist_radius for bx, by in blacklist):
            continue
        dist = min(
            math.hypot(wx - robot.x, wy - robot.y)
            for wx, wy in (grid.grid_to_world(c) for c in frontier.cells)
        )
        cost = potential_scale * dist - gain_scale * frontier.size
        key = (cost, fx, fy)
        if best_cost is None or key < best_cost:
            best_cost = key
            best_centroid = (fx, fy)
    if best_centroid is None:
        raise NoCandidatesError("every frontier is blacklisted")
    return best_centroid
