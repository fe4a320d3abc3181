"""A* planning and the path follower."""

import heapq
import math

import numpy as np
import pytest

from rescuesim.exploration import MotionLimits
from rescuesim.grid import FREE, OCCUPIED, OccupancyGrid
from rescuesim.navigation import (
    ACTIVE,
    DONE,
    FAILED,
    FollowerConfig,
    PathFollower,
    path_cost,
    plan_path,
    waypoints_from_path,
)
from rescuesim.tags import RobotPose


def make_grid(w, h, fill=FREE, res=0.05):
    g = OccupancyGrid(width=w, height=h, resolution=res)
    g.cells[:] = fill
    return g


def dijkstra_cost(grid, start, goal):
    """Reference shortest-path cost over the same 8-connected moves."""
    sqrt2 = math.sqrt(2.0)
    dist = {start: 0.0}
    heap = [(0.0, start)]
    seen = set()
    while heap:
        d, cur = heapq.heappop(heap)
        if cur in seen:
            continue
        if cur == goal:
            return d
        seen.add(cur)
        x, y = cur
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if dx == dy == 0:
                    continue
                n = (x + dx, y + dy)
                if not grid.in_bounds(n) or grid[n] != FREE:
                    continue
                nd = d + (sqrt2 if dx and dy else 1.0)
                if nd < dist.get(n, math.inf):
                    dist[n] = nd
                    heapq.heappush(heap, (nd, n))
    return math.inf


class TestPlanPath:
    def test_straight_corridor(self):
        g = make_grid(30, 3)
        path = plan_path(g, (0, 1), (29, 1))
        assert path[0] == (0, 1) and path[-1] == (29, 1)
        assert path_cost(path) == pytest.approx(29.0)

    def test_goal_in_occupied_is_unreachable(self):
        g = make_grid(10, 10)
        g[(5, 5)] = OCCUPIED
        assert plan_path(g, (0, 0), (5, 5)) == []

    def test_walled_off_goal_unreachable(self):
        g = make_grid(11, 11)
        g.cells[:, 5] = OCCUPIED
        assert plan_path(g, (0, 0), (9, 9)) == []

    def test_start_must_be_free(self):
        g = make_grid(5, 5)
        g[(0, 0)] = OCCUPIED
        with pytest.raises(ValueError):
            plan_path(g, (0, 0), (3, 3))

    def test_trivial_start_equals_goal(self):
        g = make_grid(5, 5)
        assert plan_path(g, (2, 2), (2, 2)) == [(2, 2)]

    def test_random_mazes_match_dijkstra(self):
        rng = np.random.default_rng(12)
        for case in range(15):
            g = make_grid(24, 24)
            g.cells[rng.random((24, 24)) < 0.3] = OCCUPIED
            free = np.argwhere(g.cells == FREE)
            a = tuple(int(v) for v in free[rng.integers(0, len(free))][::-1])
            b = tuple(int(v) for v in free[rng.integers(0, len(free))][::-1])
            path = plan_path(g, a, b)
            ref = dijkstra_cost(g, a, b)
            if not path:
                assert ref == math.inf, f"case {case}"
            else:
                assert path_cost(path) == pytest.approx(ref), f"case {case}"
                for c1, c2 in zip(path, path[1:]):
                    assert max(abs(c1[0] - c2[0]), abs(c1[1] - c2[1])) == 1
                    assert g[c2] == FREE


class TestWaypoints:
    def test_stride_and_goal_point(self):
        g = make_grid(30, 3)
        path = plan_path(g, (0, 1), (20, 1))
        wps = waypoints_from_path(g, path, goal_point=(1.02, 0.075), stride=5)
        assert wps[0] == g.grid_to_world((0, 1))
        assert wps[-1] == (1.02, 0.075)


LIMITS = MotionLimits(v_max=0.22, omega_max=2.84)


class TestPathFollower:
    def step(self, follower, pose, dt=0.05):
        v, w = follower.command(pose, LIMITS, dt)
        yaw = pose.yaw + w * dt
        return RobotPose(pose.x + v * math.cos(pose.yaw) * dt,
                         pose.y + v * math.sin(pose.yaw) * dt, pose.z, yaw), v, w

    def test_aligned_straight_path_saturates(self):
        follower = PathFollower([(1.0, 0.0)], goal_yaw=None)
        pose = RobotPose(0.0, 0.0, 0.0, 0.0)
        v, _ = follower.command(pose, LIMITS, 0.05)
        assert v == pytest.approx(LIMITS.v_max)

    def test_goal_behind_rotates_first(self):
        follower = PathFollower([(-1.0, 0.0)], goal_yaw=None)
        pose = RobotPose(0.0, 0.0, 0.0, 0.0)
        v, w = follower.command(pose, LIMITS, 0.05)
        assert v == 0.0 and abs(w) > 0.0

    def test_drives_to_goal_and_yaw(self):
        follower = PathFollower([(0.5, 0.0), (1.0, 0.0)], goal_yaw=math.pi / 2)
        pose = RobotPose(0.0, 0.0, 0.0, 0.0)
        for _ in range(2000):
            pose, v, w = self.step(follower, pose)
            if follower.status != ACTIVE:
                break
        assert follower.status == DONE
        assert math.hypot(pose.x - 1.0, pose.y) < 0.12
        assert abs(pose.yaw - math.pi / 2) < 0.2

    def test_stall_fails_after_timeout(self):
        follower = PathFollower([(5.0, 0.0)], goal_yaw=None,
                                config=FollowerConfig(progress_timeout=2.0))
        pose = RobotPose(0.0, 0.0, 0.0, 0.0)  # never moved
        elapsed = 0.0
        while follower.status == ACTIVE and elapsed < 10.0:
            follower.command(pose, LIMITS, 0.1)
            elapsed += 0.1
        assert follower.status == FAILED
        assert elapsed <= 2.5

    def test_empty_waypoints_rejected(self):
        with pytest.raises(ValueError):
            PathFollower([], goal_yaw=None)
