"""Mission orchestration: explore until frontier exhaustion, then sweep
the mapped free space with a spin at every goal, localizing tags all the
while. Everything runs on simulated time from one master seed, so a rerun
with the same config reproduces the run bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import SimConfig, expected_tag_ids
from .coverage import EmptyMapError, plan_coverage
from .exploration import (
    NoCandidatesError,
    evaluate_pose_gain,
    greedy_baseline_goal,
    sample_candidates,
)
from .frontiers import ExplorationState, cluster_frontiers, ewfd_update, revalidate_store
from .grid import FREE, OccupancyGrid, inflate, integrate_scan
from .navigation import (
    ACTIVE,
    DONE as NAV_DONE,
    FAILED as NAV_FAILED,
    PathFollower,
    plan_path,
    waypoints_from_path,
)
from .tags import (
    RobotPose,
    TagFilterState,
    ckf_update,
    init_filter,
    write_estimate_files,
)
from .util import substream
from .world import Robot, WorldModel, simulate_lidar, simulate_tag_detections, step_robot

EXPLORING = "EXPLORING"
RESCUE_NAVIGATE = "RESCUE_NAVIGATE"
RESCUE_SPIN = "RESCUE_SPIN"
MISSION_DONE = "DONE"


def _jsonable(value):
    """NaN-free copy for strict JSON output (auto-placed start pose is
    recorded as null)."""
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


@dataclass
class MissionReport:
    status: str  # DONE or INCOMPLETE
    seed: int
    explorer: str
    world_name: str
    exploration_time: float | None
    total_time: float
    detected_tags: list[int]
    expected_tags: list[int]
    tag_results: dict[int, dict]
    events: list[dict]
    counters: dict[str, int]
    config_echo: dict
    final_map: OccupancyGrid | None = None

    def to_json_dict(self) -> dict:
        return _jsonable({
            "status": self.status,
            "seed": self.seed,
            "explorer": self.explorer,
            "world": self.world_name,
            "exploration_time": self.exploration_time,
            "total_time": self.total_time,
            "detected_tags": self.detected_tags,
            "expected_tags": self.expected_tags,
            "tags": {str(k): v for k, v in sorted(self.tag_results.items())},
            "events": self.events,
            "counters": self.counters,
            "config": self.config_echo,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"


class Mission:
    """Single-threaded simulation loop; subsystems run in a fixed order
    each tick for determinism."""

    def __init__(
        self,
        world: WorldModel,
        config: SimConfig,
        seed: int,
        explorer: str = "nbv",
        world_name: str = "world",
        out_dir: str | Path | None = None,
    ):
        if explorer not in ("nbv", "greedy"):
            raise ValueError(f"unknown explorer {explorer!r}")
        self.world = world
        self.config = config
        self.seed = int(seed)
        self.explorer = explorer
        self.world_name = world_name
        self.out_dir = Path(out_dir) if out_dir is not None else None

        truth = world.truth_grid
        self.grid = OccupancyGrid(truth.width, truth.height, truth.resolution, truth.origin)
        self.exploration = ExplorationState.for_grid(
            self.grid, node_capacity=config.frontier.node_capacity
        )
        start = self._start_pose()
        self.robot = Robot(
            pose=start,
            limits=config.limits,
            camera_height=config.mission.camera_height,
        )
        self.camera_rng = substream(self.seed, 0)
        self.filters: dict[int, TagFilterState] = {}
        self.detected_tags: set[int] = set()
        self.expected = expected_tag_ids(
            config.mission.expected_tags, [t.tag_id for t in world.tags]
        )

        self.phase = EXPLORING
        self.sim_time = 0.0
        self.exploration_time: float | None = None
        self.goal_queue: list[tuple[float, float]] = []
        self.follower: PathFollower | None = None
        self.events: list[dict] = []
        self.counters = {
            "scans": 0, "goal_requests": 0, "goals_skipped": 0,
            "replans": 0, "detections": 0, "collisions": 0,
            "stop_flag_events": 0,
        }

        self._next_scan = 0.0
        self._next_detect = 0.0
        self._next_goal = 0.0
        self._goal_request_idx = 0
        self._replanned_current = False
        self._no_candidate_streak = 0
        self._spin_accum = 0.0
        self._blacklist: list[tuple[float, float]] = []
        self._current_goal: tuple[tuple[float, float], float] | None = None
        self._greedy_anchor: tuple[float, float] | None = None
        self._greedy_anchor_time = 0.0

    # setup helpers

    def _start_pose(self) -> RobotPose:
        cfg = self.config.mission
        truth = self.world.truth_grid
        if not (math.isnan(cfg.start_x) or math.isnan(cfg.start_y)):
            pose = RobotPose(cfg.start_x, cfg.start_y, cfg.camera_height, cfg.start_yaw)
            if truth[truth.world_to_grid((pose.x, pose.y))] != FREE:
                raise ValueError("configured start pose is not on free space")
            return pose
        # Prefer a start with full clearance so the robot is not wedged
        # against an obstacle on tick one.
        cleared = inflate(truth, self.config.grid.inflation_radius)
        free = np.argwhere(cleared.cells == FREE)
        if free.size == 0:
            free = np.argwhere(truth.cells == FREE)
        if free.size == 0:
            raise ValueError("world has no free space")
        center = np.array([(truth.height - 1) / 2.0, (truth.width - 1) / 2.0])
        best = free[np.argmin(((free - center) ** 2).sum(axis=1))]
        x, y = truth.grid_to_world((int(best[1]), int(best[0])))
        return RobotPose(x, y, cfg.camera_height, cfg.start_yaw)

    def _log(self, event: str):
        self.events.append({"t": round(self.sim_time, 3), "event": event})

    # main loop

    def run(self) -> MissionReport:
        watchdog = self.config.mission.watchdog
        while self.phase != MISSION_DONE and self.sim_time < watchdog:
            self.tick()
        status = "DONE" if self.phase == MISSION_DONE else "INCOMPLETE"
        if status == "INCOMPLETE":
            self._log("watchdog_timeout")
        return self._report(status)

    def tick(self):
        """One dt step: sense, decide, and move, in that order."""
        cfg = self.config
        dt = cfg.mission.dt

        if self.sim_time >= self._next_scan:
            self._next_scan = self.sim_time + cfg.mission.scan_period
            self._integrate_lidar()
        if self.sim_time >= self._next_detect:
            self._next_detect = self.sim_time + cfg.camera.detection_period
            self._process_detections()

        if self.phase == EXPLORING:
            self._tick_exploring()
        elif self.phase == RESCUE_NAVIGATE:
            self._tick_rescue_navigate()
        elif self.phase == RESCUE_SPIN:
            self._tick_rescue_spin()

        self.sim_time += dt

    # sensing

    def _integrate_lidar(self):
        cfg = self.config
        scan = simulate_lidar(
            self.world, self.robot.pose,
            n_beams=cfg.lidar.n_beams, max_range=cfg.lidar.max_range,
        )
        pose = self.robot.pose
        self.grid, bbox = integrate_scan(self.grid, (pose.x, pose.y, pose.yaw), scan)
        if self.phase == EXPLORING:
            # Frontier bookkeeping is only consumed by exploration goals.
            robot_cell = self.grid.world_to_grid((pose.x, pose.y))
            if self.grid[robot_cell] == FREE:
                ewfd_update(self.exploration, self.grid, bbox, robot_cell)
        self.counters["scans"] += 1

    def _process_detections(self):
        detections = simulate_tag_detections(
            self.world, self.robot, self.config.camera,
            self.camera_rng, timestamp=self.sim_time,
        )
        noise = self.config.filter.noise_model()
        for z in detections:
            self.counters["detections"] += 1
            if z.tag_id not in self.filters:
                self.filters[z.tag_id] = init_filter(
                    z, self._camera_pose(), sigma0=self.config.filter.sigma0
                )
                self._log(f"tag_{z.tag_id}_first_detection")
            else:
                self.filters[z.tag_id] = ckf_update(
                    self.filters[z.tag_id], z, self._camera_pose(), noise
                )
            self.detected_tags.add(z.tag_id)

    def _camera_pose(self) -> RobotPose:
        p = self.robot.pose
        return RobotPose(p.x, p.y, self.robot.camera_height, p.yaw)

    # exploration phase

    def _tick_exploring(self):
        cfg = self.config
        if self.sim_time >= self._next_goal:
            self._next_goal = self.sim_time + cfg.exploration.goal_request_period
            self._request_exploration_goal()
            if self.phase != EXPLORING:
                return
        if self.explorer == "greedy":
            self._check_greedy_blacklist()
        self._drive()
        if self.follower is not None and self.follower.status == NAV_FAILED:
            self._handle_goal_failure()

    def _request_exploration_goal(self):
        cfg = self.config
        self.counters["goal_requests"] += 1
        self._goal_request_idx += 1
        revalidate_store(self.exploration, self.grid)
        frontiers = cluster_frontiers(
            self.exploration.store, self.grid,
            min_frontier_size=cfg.frontier.min_frontier_size,
        )
        if not frontiers:
            self._finish_exploration("no frontiers left")
            return

        costmap = self._costmap()
        if self.explorer == "nbv":
            request_seed = int(substream(self.seed, 3, self._goal_request_idx).integers(2 ** 31))
            try:
                candidates = sample_candidates(
                    self.grid, frontiers, self.robot.pose,
                    cfg.exploration, cfg.limits, request_seed,
                )
            except NoCandidatesError:
                self._no_candidate_streak += 1
                if self._no_candidate_streak >= 2:
                    self._finish_exploration("no valid candidates twice")
                return
            self._no_candidate_streak = 0
            ranked = sorted(
                candidates,
                key=lambda c: (-c.potential_gain, c.time_cost, c.position),
            )
            if self._keep_current_goal(ranked[0].potential_gain):
                return
            for cand in ranked[: cfg.mission.max_goal_attempts]:
                if self._adopt_goal(costmap, cand.position, cand.orientation):
                    self._replanned_current = False
                    self._current_goal = (cand.position, cand.orientation)
                    return
            self._no_candidate_streak += 1
            if self._no_candidate_streak >= 2:
                self._finish_exploration("no plannable candidates twice")
        else:
            remaining = list(frontiers)
            while remaining:
                try:
                    goal = greedy_baseline_goal(
                        remaining, self.robot.pose, self.grid,
                        potential_scale=cfg.greedy.potential_scale,
                        gain_scale=cfg.greedy.gain_scale,
                        blacklist=self._blacklist,
                        blacklist_radius=cfg.greedy.blacklist_radius,
                    )
                except NoCandidatesError:
                    self._finish_exploration("all frontiers blacklisted")
                    return
                if self._adopt_goal(costmap, goal, 0.0):
                    self._replanned_current = False
                    self._greedy_anchor = (self.robot.pose.x, self.robot.pose.y)
                    self._greedy_anchor_time = self.sim_time
                    return
                self._blacklist.append(goal)
                remaining = [f for f in remaining if f.centroid != goal]
            self._finish_exploration("no reachable frontier goals")

    def _keep_current_goal(self, best_new_gain: float) -> bool:
        """Hold the active exploration goal unless the challenger clearly
        beats its re-evaluated potential gain."""
        if self.follower is None or self.follower.status != ACTIVE \
                or self._current_goal is None:
            return False
        position, yaw = self._current_goal
        current = evaluate_pose_gain(
            self.grid, position, yaw, self.robot.pose,
            self.config.exploration, self.config.limits,
        )
        if current.potential_gain <= 0.0:
            return False
        return best_new_gain <= self.config.exploration.goal_hysteresis * \
            current.potential_gain

    def _check_greedy_blacklist(self):
        """Blacklist the active goal after blacklist_timeout seconds
        without blacklist_progress meters of motion."""
        cfg = self.config.greedy
        if self.follower is None or self._greedy_anchor is None:
            return
        moved = math.hypot(self.robot.pose.x - self._greedy_anchor[0],
                           self.robot.pose.y - self._greedy_anchor[1])
        if moved >= cfg.blacklist_progress:
            self._greedy_anchor = (self.robot.pose.x, self.robot.pose.y)
            self._greedy_anchor_time = self.sim_time
        elif self.sim_time - self._greedy_anchor_time > cfg.blacklist_timeout:
            goal = self.follower.goal()
            self._blacklist.append(goal)
            self._log(f"greedy_blacklist_{goal[0]:.2f}_{goal[1]:.2f}")
            self.follower = None
            self._greedy_anchor = None

    def _finish_exploration(self, reason: str):
        self.exploration_time = round(self.sim_time, 6)
        self.counters["stop_flag_events"] += 1
        self._log(f"exploration_stop_flag ({reason})")
        self.follower = None
        try:
            inflated = inflate(self.grid, self.config.grid.inflation_radius)
            coverage_seed = int(substream(self.seed, 4).integers(2 ** 31))
            plan = plan_coverage(self.grid, inflated, coverage_seed)
            self.goal_queue = list(plan.goals)
            self._log(f"coverage_plan_{len(plan.goals)}_goals")
        except EmptyMapError:
            self.goal_queue = []
            self._log("coverage_plan_empty")
        self.phase = RESCUE_NAVIGATE

    # rescue phase

    def _tick_rescue_navigate(self):
        if self.expected and self.expected.issubset(self.detected_tags):
            self._finish_mission("all expected tags detected")
            return
        if self.follower is None:
            if not self.goal_queue:
                self._finish_mission("goal queue exhausted")
                return
            goal = self.goal_queue.pop(0)
            if not self._adopt_goal(self._costmap(), goal, None):
                self.counters["goals_skipped"] += 1
                self._log(f"rescue_goal_unreachable_{goal[0]:.2f}_{goal[1]:.2f}")
                return
            self._replanned_current = False
        self._drive()
        if self.follower is None:
            return
        if self.follower.status == NAV_DONE:
            self.follower = None
            self.phase = RESCUE_SPIN
            self._spin_accum = 0.0
        elif self.follower.status == NAV_FAILED:
            self._handle_goal_failure()

    def _tick_rescue_spin(self):
        if self.expected and self.expected.issubset(self.detected_tags):
            self._finish_mission("all expected tags detected")
            return
        cfg = self.config
        omega = min(2.0 * math.pi / cfg.mission.spin_duration, cfg.limits.omega_max)
        self.robot = step_robot(self.robot, 0.0, omega, cfg.mission.dt, self.world.truth_grid)
        self._spin_accum += omega * cfg.mission.dt
        if self._spin_accum >= 2.0 * math.pi - 1e-9:
            self.phase = RESCUE_NAVIGATE

    def _finish_mission(self, reason: str):
        self.phase = MISSION_DONE
        self._log(f"finish_search ({reason})")
        if self.out_dir is not None:
            write_estimate_files(self.filters, self.out_dir)

    # movement helpers

    def _costmap(self) -> OccupancyGrid:
        return inflate(self.grid, self.config.grid.inflation_radius)

    def _plan_start(self, costmap: OccupancyGrid):
        """Planning start: the robot's cell, or the nearest costmap-FREE
        cell when the robot is parked inside the inflation band. The
        follower then drives the short escape leg first."""
        cell = costmap.world_to_grid((self.robot.pose.x, self.robot.pose.y))
        if costmap[cell] == FREE:
            return cell
        reach = int(math.ceil(
            (self.config.grid.inflation_radius + 0.15) / costmap.resolution))
        best = None
        best_d = None
        for dx in range(-reach, reach + 1):
            for dy in range(-reach, reach + 1):
                n = (cell[0] + dx, cell[1] + dy)
                if not costmap.in_bounds(n) or costmap[n] != FREE:
                    continue
                d = dx * dx + dy * dy
                if best_d is None or (d, n) < (best_d, best):
                    best = n
                    best_d = d
        return best

    def _nearest_plannable(self, costmap: OccupancyGrid, point: tuple[float, float]):
        """Goal cell: the requested cell, or the nearest FREE costmap cell
        within the goal tolerance (move-base style)."""
        try:
            cell = costmap.world_to_grid(point)
        except ValueError:
            return None
        if costmap[cell] == FREE:
            return cell
        reach = max(1, int(math.ceil(self.config.mission.goal_tolerance / costmap.resolution)))
        best = None
        best_d = None
        for dx in range(-reach, reach + 1):
            for dy in range(-reach, reach + 1):
                n = (cell[0] + dx, cell[1] + dy)
                if not costmap.in_bounds(n) or costmap[n] != FREE:
                    continue
                d = dx * dx + dy * dy
                if best_d is None or (d, n) < (best_d, best):
                    best = n
                    best_d = d
        if best is None:
            return None
        if math.hypot(best[0] - cell[0], best[1] - cell[1]) * costmap.resolution \
                > self.config.mission.goal_tolerance + costmap.resolution:
            return None
        return best

    def _adopt_goal(
        self,
        costmap: OccupancyGrid,
        point: tuple[float, float],
        yaw: float | None,
    ) -> bool:
        goal_cell = self._nearest_plannable(costmap, point)
        if goal_cell is None:
            return False
        start = self._plan_start(costmap)
        if start is None:
            return False
        path = plan_path(costmap, start, goal_cell)
        if not path:
            return False
        waypoints = waypoints_from_path(
            costmap, path,
            goal_point=costmap.grid_to_world(goal_cell),
            stride=self.config.mission.waypoint_stride,
        )
        self.follower = PathFollower(waypoints, goal_yaw=yaw)
        return True

    def _drive(self):
        if self.follower is None:
            return
        cfg = self.config
        v, omega = self.follower.command(self.robot.pose, cfg.limits, cfg.mission.dt)
        if self.follower.status != ACTIVE and (v, omega) == (0.0, 0.0):
            return
        self.robot = step_robot(self.robot, v, omega, cfg.mission.dt, self.world.truth_grid)
        if self.robot.collided:
            self.counters["collisions"] += 1

    def _handle_goal_failure(self):
        goal = self.follower.goal() if self.follower else None
        self.follower = None
        if goal is None:
            return
        if not self._replanned_current:
            self._replanned_current = True
            self.counters["replans"] += 1
            if self._adopt_goal(self._costmap(), goal, None):
                return
        self.counters["goals_skipped"] += 1
        if self.explorer == "greedy" and self.phase == EXPLORING:
            self._blacklist.append(goal)
        self._log(f"goal_skipped_{goal[0]:.2f}_{goal[1]:.2f}")

    # reporting

    def _report(self, status: str) -> MissionReport:
        tag_results = {}
        for tag in self.world.tags:
            entry: dict = {
                "truth": [float(v) for v in tag.position],
                "detected": tag.tag_id in self.detected_tags,
            }
            st = self.filters.get(tag.tag_id)
            if st is not None:
                ckf = [float(v) for v in st.mean]
                last = [float(v) for v in st.history[-1]]
                entry.update({
                    "ckf": ckf,
                    "last": last,
                    "n_updates": st.n_updates,
                    "ckf_error": float(np.linalg.norm(st.mean - tag.position)),
                    "last_error": float(np.linalg.norm(st.history[-1] - tag.position)),
                })
            tag_results[tag.tag_id] = entry
        return MissionReport(
            status=status,
            seed=self.seed,
            explorer=self.explorer,
            world_name=self.world_name,
            exploration_time=self.exploration_time,
            total_time=round(self.sim_time, 6),
            detected_tags=sorted(self.detected_tags),
            expected_tags=sorted(self.expected),
            tag_results=tag_results,
            events=self.events,
            counters=self.counters,
            config_echo=self.config.echo(),
            final_map=self.grid,
        )


def run_mission(
    world: WorldModel,
    config: SimConfig,
    seed: int,
    explorer: str = "nbv",
    world_name: str = "world",
    out_dir: str | Path | None = None,
) -> MissionReport:
    """Run one full mission to completion (or watchdog) and report."""
    mission = Mission(world, config, seed, explorer=explorer,
                      world_name=world_name, out_dir=out_dir)
    report = mission.run()
    if report.status == "INCOMPLETE" and out_dir is not None:
        # The DONE transition never fired, so flush what the filters have.
        write_estimate_files(mission.filters, out_dir)
    return report
