"""Per-tag 3D position estimation.

Each tag gets an independent cubature Kalman filter over its world-frame
position. The transition model is the identity with zero process noise
(tags are static); the measurement is bearing/elevation/range from the
robot with a noise covariance that grows with the fourth power of range,
so distant (and systematically biased) detections barely move the mean.
A raw last-measurement estimate is kept alongside as the baseline.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .util import wrap_angle, wrap_angles


@dataclass
class RobotPose:
    """Planar pose plus camera height; yaw is kept in (-pi, pi]."""

    x: float
    y: float
    z: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        self.yaw = wrap_angle(self.yaw)

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)

    def position3(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass
class TagMeasurement:
    bearing: float
    elevation: float
    range: float
    tag_id: int
    timestamp: float = 0.0


@dataclass
class NoiseModel:
    """Measurement covariance diag(base) * range**exponent.

    The diagonal order matches the measurement vector (bearing, elevation,
    range)."""

    base_diag: tuple[float, float, float] = (0.05, math.pi / 20, math.pi / 20)
    range_exponent: float = 4.0


@dataclass
class TagFilterState:
    tag_id: int
    mean: np.ndarray
    covariance: np.ndarray
    n_updates: int = 1
    history: list = field(default_factory=list)


class FilterNumericsError(RuntimeError):
    def __init__(self, tag_id: int, message: str):
        super().__init__(f"tag {tag_id}: {message}")
        self.tag_id = tag_id


def measurement_model(tag_pos, robot: RobotPose) -> tuple[float, float, float]:
    """(bearing, elevation, range) of a tag position seen from the robot.

    Bearing is measured from the robot heading and wrapped to (-pi, pi];
    elevation is the angle from the +Z axis, so a tag at camera height
    reads pi/2.
    """
    dx = float(tag_pos[0]) - robot.x
    dy = float(tag_pos[1]) - robot.y
    dz = float(tag_pos[2]) - robot.z
    rho = math.sqrt(dx * dx + dy * dy + dz * dz)
    if rho == 0.0:
        raise ValueError("tag coincides with the robot; range is singular")
    bearing = wrap_angle(math.atan2(dy, dx) - robot.yaw)
    elevation = math.acos(max(-1.0, min(1.0, dz / rho)))
    return bearing, elevation, rho


def inverse_measurement(z: TagMeasurement, robot: RobotPose) -> np.ndarray:
    """World position implied by a single measurement (exact inverse of
    the measurement model)."""
    heading = z.bearing + robot.yaw
    horizontal = z.range * math.sin(z.elevation)
    return np.array([
        robot.x + horizontal * math.cos(heading),
        robot.y + horizontal * math.sin(heading),
        robot.z + z.range * math.cos(z.elevation),
    ])


def measurement_noise(rho: float, model: NoiseModel = NoiseModel()) -> np.ndarray:
    if rho <= 0:
        raise ValueError("range must be positive")
    return np.diag(model.base_diag) * rho ** model.range_exponent


def init_filter(z: TagMeasurement, robot: RobotPose, sigma0: float = 0.5) -> TagFilterState:
    """Start a filter at the inverse-model position of the first detection."""
    mean = inverse_measurement(z, robot)
    return TagFilterState(
        tag_id=z.tag_id,
        mean=mean,
        covariance=np.eye(3) * sigma0 ** 2,
        n_updates=1,
        history=[mean.copy()],
    )


def cubature_points(mean: np.ndarray, cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Third-degree spherical-radial cubature points and weights.

    2n points at mean +/- sqrt(n) * (Cholesky column), equal weights; they
    reproduce the mean and covariance exactly.
    """
    n = mean.size
    chol = np.linalg.cholesky(cov)
    scaled = math.sqrt(n) * chol
    points = np.concatenate([mean + scaled.T, mean - scaled.T], axis=0)
    weights = np.full(2 * n, 1.0 / (2 * n))
    return points, weights


def _factor(cov: np.ndarray, tag_id: int) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    try:
        return np.linalg.cholesky(cov + 1e-9 * np.eye(cov.shape[0]))
    except np.linalg.LinAlgError:
        raise FilterNumericsError(tag_id, "covariance factorization failed twice")


def ckf_update(
    state: TagFilterState,
    z: TagMeasurement,
    robot: RobotPose,
    model: NoiseModel = NoiseModel(),
) -> TagFilterState:
    """One measurement update; prediction is a no-op (static tag, zero
    process noise). Returns a new state; the input is not modified."""
    if state.tag_id != z.tag_id:
        raise ValueError(f"measurement for tag {z.tag_id} fed to filter {state.tag_id}")

    n = 3
    prior_cov = 0.5 * (state.covariance + state.covariance.T)
    chol = _factor(prior_cov, state.tag_id)
    spread = math.sqrt(n) * chol
    points = np.concatenate([state.mean + spread.T, state.mean - spread.T], axis=0)

    zs = np.empty((2 * n, 3))
    for j, p in enumerate(points):
        zs[j] = measurement_model(p, robot)
    # Keep all bearings on one branch before averaging across the cut.
    ref = zs[0, 0]
    zs[:, 0] = ref + wrap_angles(zs[:, 0] - ref)

    z_pred = zs.mean(axis=0)
    dz = zs - z_pred
    dx = points - state.mean
    w = 1.0 / (2 * n)
    s_cov = w * dz.T @ dz + measurement_noise(z_pred[2], model)
    cross = w * dx.T @ dz

    gain = np.linalg.solve(s_cov.T, cross.T).T
    innovation = np.array([
        wrap_angle(z.bearing - z_pred[0]),
        z.elevation - z_pred[1],
        z.range - z_pred[2],
    ])
    mean = state.mean + gain @ innovation
    cov = prior_cov - gain @ s_cov @ gain.T
    cov = 0.5 * (cov + cov.T)

    if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
        raise FilterNumericsError(state.tag_id, "non-finite state after update")
    eigvals, eigvecs = np.linalg.eigh(cov)
    if eigvals[0] < 1e-12:
        eigvals = np.maximum(eigvals, 1e-12)
        cov = eigvecs @ np.diag(eigvals) @ eigvecs.T
        cov = 0.5 * (cov + cov.T)

    return TagFilterState(
        tag_id=state.tag_id,
        mean=mean,
        covariance=cov,
        n_updates=state.n_updates + 1,
        history=state.history + [inverse_measurement(z, robot)],
    )


def last_measurement_estimate(state: TagFilterState) -> np.ndarray:
    """The baseline estimate: position implied by the newest raw detection."""
    if not state.history:
        raise ValueError(f"tag {state.tag_id} has no measurements")
    return state.history[-1]


def estimates_payload(filters: dict[int, TagFilterState], kind: str) -> dict:
    """JSON payload mapping tag id to {x, y, z, n_updates}.

    kind is "ckf" for the filtered means or "last" for the raw
    last-measurement baseline.
    """
    out = {}
    for tag_id in sorted(filters):
        st = filters[tag_id]
        pos = st.mean if kind == "ckf" else last_measurement_estimate(st)
        out[str(tag_id)] = {
            "x": float(pos[0]),
            "y": float(pos[1]),
            "z": float(pos[2]),
            "n_updates": st.n_updates,
        }
    return out


def write_estimate_files(filters: dict[int, TagFilterState], out_dir) -> tuple[Path, Path]:
    """Write ckf_estimates.json and last_measurement_estimates.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ckf_path = out_dir / "ckf_estimates.json"
    last_path = out_dir / "last_measurement_estimates.json"
    ckf_path.write_text(json.dumps(estimates_payload(filters, "ckf"), indent=2, sort_keys=True) + "\n")
    last_path.write_text(json.dumps(estimates_payload(filters, "last"), indent=2, sort_keys=True) + "\n")
    return ckf_path, last_path
