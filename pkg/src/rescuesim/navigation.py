"""Grid path planning and a rotate-then-translate path follower.

These stand in for a full navigation stack: A* over the inflated map
produces cell waypoints, and a proportional controller turns them into
velocity commands with a no-progress watchdog.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

from .exploration import MotionLimits
from .grid import FREE, GridCell, OccupancyGrid
from .tags import RobotPose
from .util import wrap_angle

_SQRT2 = math.sqrt(2.0)
_MOVES = (
    (1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
    (1, 1, _SQRT2), (1, -1, _SQRT2), (-1, 1, _SQRT2), (-1, -1, _SQRT2),
)


def plan_path(costmap: OccupancyGrid, start: GridCell, goal: GridCell) -> list[GridCell]:
    """A* over 8-connected FREE cells with Euclidean heuristic.

    Returns the cell sequence from start to goal inclusive, or an empty
    list when the goal is unreachable (including a goal on a non-FREE
    cell).
    """
    if not costmap.in_bounds(start) or costmap[start] != FREE:
        raise ValueError(f"start {start} is not a FREE cell of the costmap")
    if not costmap.in_bounds(goal) or costmap[goal] != FREE:
        return []
    if start == goal:
        return [start]

    w, h = costmap.width, costmap.height
    cells = costmap.cells
    gx, gy = goal

    g_score = {start: 0.0}
    came: dict[GridCell, GridCell] = {}
    open_heap = [(math.hypot(gx - start[0], gy - start[1]), 0.0, start)]
    closed: set[GridCell] = set()

    while open_heap:
        _, g, current = heapq.heappop(open_heap)
        if current in closed:
            continue
        if current == goal:
            path = [current]
            while current in came:
                current = came[current]
                path.append(current)
            path.reverse()
            return path
        closed.add(current)
        cx, cy = current
        for dx, dy, step in _MOVES:
            nx, ny = cx + dx, cy + dy
            if not (0 <= nx < w and 0 <= ny < h) or cells[ny, nx] != FREE:
                continue
            n = (nx, ny)
            tentative = g + step
            if tentative < g_score.get(n, math.inf):
                g_score[n] = tentative
                came[n] = current
                heapq.heappush(open_heap, (tentative + math.hypot(gx - nx, gy - ny),
                                           tentative, n))
    return []


def path_cost(path: list[GridCell]) -> float:
    """Total 8-connected step cost of a planned path."""
    total = 0.0
    for a, b in zip(path, path[1:]):
        total += _SQRT2 if (a[0] != b[0] and a[1] != b[1]) else 1.0
    return total


ACTIVE = "active"
DONE = "done"
FAILED = "failed"


@dataclass
class FollowerConfig:
    waypoint_radius: float = 0.1
    goal_radius: float = 0.1
    goal_yaw_tol: float = 0.15
    align_threshold: float = 0.6  # rotate in place above this heading error
    k_turn: float = 2.5
    k_speed: float = 3.0
    progress_timeout: float = 15.0
    progress_epsilon: float = 0.05


class PathFollower:
    """Drives through waypoints: rotate toward the target when badly
    misaligned, otherwise arc forward; fails after progress_timeout
    seconds without closing in on the goal."""

    def __init__(
        self,
        waypoints: list[tuple[float, float]],
        goal_yaw: float | None = None,
        config: FollowerConfig | None = None,
    ):
        if not waypoints:
            raise ValueError("follower needs at least one waypoint")
        self.waypoints = list(waypoints)
        self.goal_yaw = goal_yaw
        self.cfg = config or FollowerConfig()
        self.index = 0
        self.status = ACTIVE
        self._best_goal_dist = math.inf
        self._stall_time = 0.0

    def goal(self) -> tuple[float, float]:
        return self.waypoints[-1]

    def command(self, pose: RobotPose, limits: MotionLimits, dt: float) -> tuple[float, float]:
        """Velocity command (v, omega) for this tick; (0, 0) once done or
        failed. Check .status after calling."""
        if self.status != ACTIVE:
            return 0.0, 0.0
        cfg = self.cfg

        goal_dist = math.hypot(self.waypoints[-1][0] - pose.x,
                               self.waypoints[-1][1] - pose.y)
        if goal_dist < self._best_goal_dist - cfg.progress_epsilon:
            self._best_goal_dist = goal_dist
            self._stall_time = 0.0
        else:
            self._stall_time += dt
            if self._stall_time > cfg.progress_timeout:
                self.status = FAILED
                return 0.0, 0.0

        while self.index < len(self.waypoints) - 1:
            wx, wy = self.waypoints[self.index]
            if math.hypot(wx - pose.x, wy - pose.y) < cfg.waypoint_radius:
                self.index += 1
            else:
                break

        tx, ty = self.waypoints[self.index]
        dist = math.hypot(tx - pose.x, ty - pose.y)
        at_final = self.index == len(self.waypoints) - 1

        if at_final and dist < cfg.goal_radius:
            if self.goal_yaw is None:
                self.status = DONE
                return 0.0, 0.0
            yaw_err = wrap_angle(self.goal_yaw - pose.yaw)
            if abs(yaw_err) <= cfg.goal_yaw_tol:
                self.status = DONE
                return 0.0, 0.0
            return 0.0, _clamp(cfg.k_turn * yaw_err, limits.omega_max)

        heading_err = wrap_angle(math.atan2(ty - pose.y, tx - pose.x) - pose.yaw)
        omega = _clamp(cfg.k_turn * heading_err, limits.omega_max)
        if abs(heading_err) > cfg.align_threshold:
            return 0.0, omega
        v = min(limits.v_max, cfg.k_speed * dist)
        return v, omega


def _clamp(value: float, limit: float) -> float:
    return max(-limit, min(limit, value))


def waypoints_from_path(
    grid: OccupancyGrid,
    path: list[GridCell],
    goal_point: tuple[float, float] | None = None,
    stride: int = 5,
) -> list[tuple[float, float]]:
    """Thin a cell path to world waypoints every `stride` cells, ending at
    the exact goal point when given."""
    if not path:
        return []
    pts = [grid.grid_to_world(c) for c in path[::stride]]
    last = goal_point if goal_point is not None else grid.grid_to_world(path[-1])
    if not pts or math.hypot(pts[-1][0] - last[0], pts[-1][1] - last[1]) > 1e-9:
        pts.append((float(last[0]), float(last[1])))
    return pts
