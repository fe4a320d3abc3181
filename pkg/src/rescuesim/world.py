"""Ground-truth world, robot kinematics, and simulated sensors.

The world file is line-oriented text: a ``grid <rows> <cols> <res>``
header, ASCII rows (``#`` occupied, ``.`` free, first row is the top of
the map), then ``tag <id> <x> <y> <z> <facing_deg>`` lines. ``;`` starts
a comment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .exploration import MotionLimits
from .grid import FREE, OCCUPIED, GridCell, LidarScan, OccupancyGrid, _supercover
from .tags import RobotPose, TagMeasurement, measurement_model
from .util import wrap_angle


class WorldParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass
class Tag:
    tag_id: int
    position: np.ndarray  # world (x, y, z)
    facing: float  # outward normal yaw, radians


@dataclass
class WorldModel:
    truth_grid: OccupancyGrid
    tags: list[Tag] = field(default_factory=list)

    def tag_by_id(self, tag_id: int) -> Tag:
        for t in self.tags:
            if t.tag_id == tag_id:
                return t
        raise KeyError(tag_id)


@dataclass
class CameraModel:
    """Forward tag camera. All angles are radians; noise sigmas scale
    linearly with range and the range bias is bias_coeff * range."""

    fov: float = math.radians(31.0)  # half-angle
    max_range: float = 4.0
    min_range: float = 0.2
    noise_std: tuple[float, float, float] = (0.01, 0.01, 0.01)
    bias_coeff: float = 0.03
    facing_limit: float = math.radians(80.0)
    detection_period: float = 1.0 / 15.0

    def __post_init__(self):
        if not (0 < self.min_range < self.max_range):
            raise ValueError("need 0 < min_range < max_range")
        if not (0 < self.fov <= math.pi / 2):
            raise ValueError("fov half-angle must be in (0, pi/2]")


@dataclass
class Robot:
    pose: RobotPose
    limits: MotionLimits = field(default_factory=MotionLimits)
    camera_height: float = 0.12
    collided: bool = False


def load_world(text: str) -> WorldModel:
    """Parse a world file; raises WorldParseError with the line number."""
    lines = text.splitlines()
    grid = None
    rows_needed = 0
    cols = 0
    resolution = 0.0
    ascii_rows: list[tuple[int, str]] = []
    tags: list[Tag] = []
    seen_ids: set[int] = set()

    for idx, raw in enumerate(lines, start=1):
        line = raw.split(";", 1)[0].rstrip()
        if not line.strip():
            continue
        if grid is None:
            parts = line.split()
            if parts[0] != "grid" or len(parts) != 4:
                raise WorldParseError(idx, f"expected 'grid <rows> <cols> <res>', got {line!r}")
            try:
                rows_needed = int(parts[1])
                cols = int(parts[2])
                resolution = float(parts[3])
            except ValueError:
                raise WorldParseError(idx, "grid dimensions must be numeric")
            if rows_needed < 1 or cols < 1 or resolution <= 0:
                raise WorldParseError(idx, "grid dimensions must be positive")
            grid = OccupancyGrid(width=cols, height=rows_needed, resolution=resolution)
            continue
        if len(ascii_rows) < rows_needed and not line.startswith("tag"):
            row = line.strip()
            if len(row) != cols:
                raise WorldParseError(idx, f"row has {len(row)} cells, expected {cols}")
            bad = set(row) - {"#", "."}
            if bad:
                raise WorldParseError(idx, f"unknown map characters {sorted(bad)}")
            ascii_rows.append((idx, row))
            continue
        parts = line.split()
        if parts[0] != "tag":
            raise WorldParseError(idx, f"unexpected line {line!r}")
        if len(parts) != 6:
            raise WorldParseError(idx, "expected 'tag <id> <x> <y> <z> <facing_deg>'")
        try:
            tag_id = int(parts[1])
            x, y, z, facing_deg = (float(v) for v in parts[2:])
        except ValueError:
            raise WorldParseError(idx, "tag fields must be numeric")
        if tag_id in seen_ids:
            raise WorldParseError(idx, f"duplicate tag id {tag_id}")
        seen_ids.add(tag_id)
        x0, y0, x1, y1 = grid.world_extent() if grid else (0, 0, 0, 0)
        if not (x0 <= x < x1 and y0 <= y < y1):
            raise WorldParseError(idx, f"tag {tag_id} at ({x}, {y}) outside the map")
        tags.append(Tag(tag_id=tag_id, position=np.array([x, y, z]),
                        facing=math.radians(facing_deg)))

    if grid is None:
        raise WorldParseError(len(lines) or 1, "missing grid header")
    if len(ascii_rows) != rows_needed:
        raise WorldParseError(len(lines) or 1,
                              f"expected {rows_needed} map rows, got {len(ascii_rows)}")
    # First file row is the top of the map.
    for file_row, (line_no, row) in enumerate(ascii_rows):
        gy = rows_needed - 1 - file_row
        for gx, ch in enumerate(row):
            grid.cells[gy, gx] = OCCUPIED if ch == "#" else FREE
    return WorldModel(truth_grid=grid, tags=tags)


def load_world_file(path) -> WorldModel:
    with open(path, "r", encoding="utf-8") as fh:
        return load_world(fh.read())


def step_robot(
    robot: Robot,
    v: float,
    omega: float,
    dt: float,
    truth: OccupancyGrid,
) -> Robot:
    """Unicycle integration step with collision as a no-op.

    The commanded velocities must respect the robot's limits. If the new
    position would land on a non-FREE truth cell the whole step is
    cancelled and the returned robot carries collided=True.
    """
    if abs(v) > robot.limits.v_max + 1e-12 or abs(omega) > robot.limits.omega_max + 1e-12:
        raise ValueError("commanded velocity exceeds limits")
    if dt <= 0:
        raise ValueError("dt must be positive")
    pose = robot.pose
    nx = pose.x + v * math.cos(pose.yaw) * dt
    ny = pose.y + v * math.sin(pose.yaw) * dt
    nyaw = wrap_angle(pose.yaw + omega * dt)
    try:
        cell = truth.world_to_grid((nx, ny))
        blocked = truth[cell] != FREE
    except ValueError:
        blocked = True
    if blocked:
        return replace(robot, collided=True)
    return replace(robot, pose=RobotPose(nx, ny, pose.z, nyaw), collided=False)


def simulate_lidar(
    world: WorldModel,
    pose: RobotPose,
    n_beams: int = 240,
    max_range: float = 10.0,
) -> LidarScan:
    """360-degree scan on the truth grid.

    Beam i points at yaw + 2*pi*i/n. The range is the distance to the
    center of the first occupied cell sampled along the beam (half-cell
    sampling), or math.inf past max_range.
    """
    if n_beams < 8:
        raise ValueError("lidar needs at least 8 beams")
    truth = world.truth_grid
    cell = truth.world_to_grid((pose.x, pose.y))
    if truth[cell] != FREE:
        raise ValueError("lidar pose must be on a FREE truth cell")
    res = truth.resolution
    step = 0.5 * res
    angles = pose.yaw + 2.0 * np.pi * np.arange(n_beams) / n_beams
    ts = np.arange(0.0, max_range + 0.5 * step, step)
    xs = pose.x + np.cos(angles)[:, None] * ts[None, :]
    ys = pose.y + np.sin(angles)[:, None] * ts[None, :]
    ix = np.floor((xs - truth.origin[0]) / res).astype(np.int64)
    iy = np.floor((ys - truth.origin[1]) / res).astype(np.int64)
    valid = (ix >= 0) & (ix < truth.width) & (iy >= 0) & (iy < truth.height)
    occ = valid & (truth.cells[np.where(valid, iy, 0), np.where(valid, ix, 0)] == OCCUPIED)

    ranges = np.full(n_beams, math.inf)
    hit = np.nonzero(occ.any(axis=1))[0]
    if hit.size:
        first = np.argmax(occ[hit], axis=1)
        cx = truth.origin[0] + (ix[hit, first] + 0.5) * res
        cy = truth.origin[1] + (iy[hit, first] + 0.5) * res
        ranges[hit] = np.hypot(cx - pose.x, cy - pose.y)
    return LidarScan(ranges=ranges, max_range=max_range)


def visible_tags(world: WorldModel, robot: Robot, camera: CameraModel) -> list[Tag]:
    """Tags passing the range, view-cone, occlusion, and facing checks.

    The field of view is a cone around the camera axis, so a tag mounted
    too high for the camera is never seen even when its bearing lines up.
    For tags at camera height the cone reduces to the plain bearing test.
    """
    truth = world.truth_grid
    robot_cell = truth.world_to_grid((robot.pose.x, robot.pose.y))
    out = []
    for tag in sorted(world.tags, key=lambda t: t.tag_id):
        bearing, elevation, rho = _tag_geometry(tag, robot)
        if not (camera.min_range <= rho <= camera.max_range):
            continue
        off_axis = math.acos(max(-1.0, min(1.0, math.sin(elevation) * math.cos(bearing))))
        if off_axis > camera.fov:
            continue
        view_back = math.atan2(robot.pose.y - tag.position[1],
                               robot.pose.x - tag.position[0])
        if abs(wrap_angle(view_back - tag.facing)) > camera.facing_limit:
            continue
        if _occluded(truth, robot_cell, tag):
            continue
        out.append(tag)
    return out


def simulate_tag_detections(
    world: WorldModel,
    robot: Robot,
    camera: CameraModel,
    rng: np.random.Generator,
    timestamp: float = 0.0,
) -> list[TagMeasurement]:
    """Noisy measurements of every currently visible tag.

    Gaussian noise sigmas scale with range and a deterministic range bias
    bias_coeff * range is added, mimicking a detector whose error grows
    with distance.
    """
    detections = []
    for tag in visible_tags(world, robot, camera):
        bearing, elevation, rho = _tag_geometry(tag, robot)
        sb, se, sr = camera.noise_std
        noisy_bearing = wrap_angle(bearing + rng.normal() * sb * rho)
        noisy_elev = min(math.pi, max(0.0, elevation + rng.normal() * se * rho))
        noisy_range = rho + rng.normal() * sr * rho + camera.bias_coeff * rho
        detections.append(TagMeasurement(
            bearing=noisy_bearing,
            elevation=noisy_elev,
            range=max(1e-6, noisy_range),
            tag_id=tag.tag_id,
            timestamp=timestamp,
        ))
    return detections


def _tag_geometry(tag: Tag, robot: Robot) -> tuple[float, float, float]:
    camera_pose = RobotPose(robot.pose.x, robot.pose.y, robot.camera_height,
                            robot.pose.yaw)
    return measurement_model(tag.position, camera_pose)


def _occluded(truth: OccupancyGrid, robot_cell: GridCell, tag: Tag) -> bool:
    """True when an occupied cell sits strictly between robot and tag."""
    tag_cell = truth.world_to_grid((float(tag.position[0]), float(tag.position[1])))
    cells = list(_supercover(robot_cell, tag_cell))
    for c in cells[1:-1]:
        if truth[c] == OCCUPIED:
            return True
    return False
