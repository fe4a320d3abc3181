"""World parsing, robot stepping, and the simulated sensors."""

import math

import numpy as np
import pytest

from rescuesim.exploration import MotionLimits
from rescuesim.grid import FREE, OCCUPIED
from rescuesim.tags import RobotPose, inverse_measurement
from rescuesim.world import (
    CameraModel,
    Robot,
    WorldParseError,
    load_world,
    simulate_lidar,
    simulate_tag_detections,
    step_robot,
    visible_tags,
)

BOX = """
grid 3 3 1.0
###
#.#
###
"""


def open_world(size_m=10.0, res=0.05, tags=""):
    n = round(size_m / res)
    rows = []
    for r in range(n):
        if r == 0 or r == n - 1:
            rows.append("#" * n)
        else:
            rows.append("#" + "." * (n - 2) + "#")
    return load_world(f"grid {n} {n} {res}\n" + "\n".join(rows) + "\n" + tags)


class TestLoadWorld:
    def test_tiny_box(self):
        world = load_world(BOX)
        g = world.truth_grid
        assert (g.width, g.height) == (3, 3)
        assert g[(1, 1)] == FREE
        assert sum(1 for y in range(3) for x in range(3) if g[(x, y)] == OCCUPIED) == 8

    def test_tag_line_fields(self):
        world = load_world("grid 3 3 1.0\n###\n#.#\n###\ntag 0 1.5 1.5 0.2 180\n")
        tag = world.tags[0]
        assert tag.tag_id == 0
        assert np.allclose(tag.position, [1.5, 1.5, 0.2])
        assert tag.facing == pytest.approx(math.pi)

    def test_duplicate_tag_id_names_line(self):
        text = "grid 3 3 1.0\n###\n#.#\n###\ntag 0 1.5 1.5 0.2 0\ntag 0 1.2 1.2 0.2 0\n"
        with pytest.raises(WorldParseError) as err:
            load_world(text)
        assert "line 6" in str(err.value)

    def test_bad_row_width(self):
        with pytest.raises(WorldParseError) as err:
            load_world("grid 2 3 1.0\n###\n##\n")
        assert "line 3" in str(err.value)

    def test_tag_outside_map(self):
        with pytest.raises(WorldParseError):
            load_world("grid 3 3 1.0\n###\n#.#\n###\ntag 0 9.0 1.0 0.2 0\n")

    def test_first_row_is_top(self):
        world = load_world("grid 2 2 1.0\n##\n..\n")
        g = world.truth_grid
        assert g[(0, 0)] == FREE  # bottom row in world coords
        assert g[(0, 1)] == OCCUPIED

    def test_comments_ignored(self):
        world = load_world("; header comment\ngrid 3 3 1.0\n###\n#.#  ; row\n###\n")
        assert world.truth_grid[(1, 1)] == FREE

    def test_missing_header(self):
        with pytest.raises(WorldParseError):
            load_world("###\n#.#\n###\n")


class TestStepRobot:
    def robot(self, x=5.0, y=5.0, yaw=0.0):
        return Robot(pose=RobotPose(x, y, 0.1, yaw),
                     limits=MotionLimits(v_max=1.0, omega_max=math.pi))

    def test_straight_integration(self):
        world = open_world()
        out = step_robot(self.robot(), 1.0, 0.0, 1.0, world.truth_grid)
        assert out.pose.x == pytest.approx(6.0)
        assert out.pose.y == pytest.approx(5.0)
        assert not out.collided

    def test_in_place_spin_wraps(self):
        world = open_world()
        out = step_robot(self.robot(yaw=math.pi / 2), 0.0, math.pi, 1.0, world.truth_grid)
        assert out.pose.yaw == pytest.approx(wrap(-math.pi / 2))
        assert (out.pose.x, out.pose.y) == (5.0, 5.0)

    def test_wall_collision_is_noop_with_flag(self):
        world = open_world()
        r = self.robot(x=9.8, y=5.0, yaw=0.0)
        out = step_robot(r, 1.0, 0.0, 1.0, world.truth_grid)
        assert out.collided
        assert (out.pose.x, out.pose.y, out.pose.yaw) == (9.8, 5.0, 0.0)

    def test_limit_violation_rejected(self):
        world = open_world()
        with pytest.raises(ValueError):
            step_robot(self.robot(), 2.0, 0.0, 0.1, world.truth_grid)


class TestSimulateLidar:
    def test_empty_arena_all_no_return(self):
        world = open_world(size_m=10.0)
        scan = simulate_lidar(world, RobotPose(5.0, 5.0), n_beams=16, max_range=2.0)
        assert np.all(np.isinf(scan.ranges))

    def test_wall_ahead_range(self):
        world = open_world(size_m=10.0, res=0.05)
        pose = RobotPose(6.9, 5.0, 0.0, 0.0)
        scan = simulate_lidar(world, pose, n_beams=8, max_range=5.0)
        # Wall interior starts at x=9.95; first wall-cell center at 9.975.
        assert scan.ranges[0] == pytest.approx(9.975 - 6.9, abs=world.truth_grid.resolution)

    def test_box_bounds_all_beams(self):
        world = load_world("grid 5 5 0.25\n#####\n#...#\n#...#\n#...#\n#####\n")
        pose = RobotPose(0.625, 0.625)
        scan = simulate_lidar(world, pose, n_beams=64, max_range=5.0)
        assert np.all(np.isfinite(scan.ranges))
        assert np.all(scan.ranges < 1.5)

    def test_matches_ray_march_oracle(self):
        world = open_world(size_m=4.0, res=0.1)
        g = world.truth_grid
        g.cells[20:24, 28:30] = OCCUPIED
        pose = RobotPose(1.3, 1.7, 0.0, 0.37)
        scan = simulate_lidar(world, pose, n_beams=24, max_range=3.0)
        res = g.resolution
        for i in range(24):
            ang = pose.yaw + 2 * math.pi * i / 24
            expect = math.inf
            prev_cell = None
            t = 0.0
            while t <= 3.0:
                x, y = pose.x + math.cos(ang) * t, pose.y + math.sin(ang) * t
                cell = (math.floor(x / res), math.floor(y / res))
                if cell != prev_cell and g.in_bounds(cell) and g[cell] == OCCUPIED:
                    cx, cy = g.grid_to_world(cell)
                    expect = math.hypot(cx - pose.x, cy - pose.y)
                    break
                prev_cell = cell
                t += res / 2
            assert scan.ranges[i] == pytest.approx(expect), f"beam {i}"

    def test_requires_free_pose_and_beams(self):
        world = open_world()
        with pytest.raises(ValueError):
            simulate_lidar(world, RobotPose(0.01, 0.01), n_beams=16, max_range=2.0)
        with pytest.raises(ValueError):
            simulate_lidar(world, RobotPose(5, 5), n_beams=4, max_range=2.0)


def wrap(a):
    return math.pi - (math.pi - a) % (2 * math.pi)


CAMERA = CameraModel(fov=math.radians(31), max_range=4.0, min_range=0.2,
                     noise_std=(0.0, 0.0, 0.0), bias_coeff=0.0)


class TestTagCamera:
    def world_with_tag(self, tag="tag 0 8.0 5.0 0.2 180\n"):
        return open_world(size_m=10.0, tags=tag)

    def robot(self, x, y, yaw):
        return Robot(pose=RobotPose(x, y, 0.12, yaw), camera_height=0.12)

    def test_tag_ahead_detected(self):
        world = self.world_with_tag()
        dets = simulate_tag_detections(world, self.robot(5.0, 5.0, 0.0), CAMERA,
                                       np.random.default_rng(0))
        assert [d.tag_id for d in dets] == [0]

    def test_tag_behind_not_detected(self):
        world = self.world_with_tag()
        dets = simulate_tag_detections(world, self.robot(5.0, 5.0, math.pi), CAMERA,
                                       np.random.default_rng(0))
        assert dets == []

    def test_tag_behind_wall_not_detected(self):
        world = self.world_with_tag()
        g = world.truth_grid
        g.cells[95:105, 140] = OCCUPIED  # wall segment between robot and tag
        dets = simulate_tag_detections(world, self.robot(5.0, 5.0, 0.0), CAMERA,
                                       np.random.default_rng(0))
        assert dets == []

    def test_tag_too_high_never_detected(self):
        world = self.world_with_tag("tag 0 6.0 5.0 3.0 180\n")
        robot = self.robot(5.0, 5.0, 0.0)
        dets = simulate_tag_detections(world, robot, CAMERA, np.random.default_rng(0))
        assert dets == []

    def test_tag_facing_away_not_detected(self):
        world = self.world_with_tag("tag 0 8.0 5.0 0.2 0\n")
        dets = simulate_tag_detections(world, self.robot(5.0, 5.0, 0.0), CAMERA,
                                       np.random.default_rng(0))
        assert dets == []

    def test_out_of_range_not_detected(self):
        world = self.world_with_tag("tag 0 9.5 5.0 0.2 180\n")
        dets = simulate_tag_detections(world, self.robot(5.0, 5.0, 0.0), CAMERA,
                                       np.random.default_rng(0))
        assert dets == []

    def test_noiseless_detection_inverts_to_truth(self):
        world = self.world_with_tag()
        robot = self.robot(5.2, 4.9, 0.05)
        dets = simulate_tag_detections(world, robot, CAMERA, np.random.default_rng(0))
        assert len(dets) == 1
        camera_pose = RobotPose(robot.pose.x, robot.pose.y, robot.camera_height,
                                robot.pose.yaw)
        back = inverse_measurement(dets[0], camera_pose)
        assert np.allclose(back, world.tags[0].position, atol=1e-9)

    def test_bias_grows_with_range(self):
        camera = CameraModel(fov=math.radians(31), max_range=4.0, min_range=0.2,
                             noise_std=(0.002, 0.002, 0.002), bias_coeff=0.05)
        world = self.world_with_tag()
        errors = {}
        for dist, x in (("near", 7.0), ("far", 4.5)):
            errs = []
            for seed in range(40):
                robot = self.robot(x, 5.0, 0.0)
                dets = simulate_tag_detections(world, robot, camera,
                                               np.random.default_rng(seed))
                camera_pose = RobotPose(x, 5.0, 0.12, 0.0)
                est = inverse_measurement(dets[0], camera_pose)
                errs.append(np.linalg.norm(est - world.tags[0].position))
            errors[dist] = np.mean(errs)
        assert errors["far"] > errors["near"]

    def test_detection_stream_deterministic(self):
        camera = CameraModel(noise_std=(0.01, 0.01, 0.01), bias_coeff=0.03)
        world = self.world_with_tag()
        robot = self.robot(5.0, 5.0, 0.0)
        a = simulate_tag_detections(world, robot, camera, np.random.default_rng(9))
        b = simulate_tag_detections(world, robot, camera, np.random.default_rng(9))
        assert a == b

    def test_visible_tags_sorted_by_id(self):
        world = open_world(tags="tag 5 6.0 5.0 0.2 180\ntag 1 6.0 5.2 0.2 180\n")
        robot = self.robot(5.0, 5.0, 0.0)
        ids = [t.tag_id for t in visible_tags(world, robot, CAMERA)]
        assert ids == sorted(ids)

    def test_camera_model_validation(self):
        with pytest.raises(ValueError):
            CameraModel(min_range=2.0, max_range=1.0)
        with pytest.raises(ValueError):
            CameraModel(fov=2.0)
