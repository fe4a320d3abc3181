"""Mission configuration: defaults, config-file parsing, and overrides.

Config files are line-oriented ``key = value`` text with dotted section
prefixes (``camera.max_range = 4.0``). ``#`` or ``;`` start comments.
Command-line ``--set`` flags use the same keys and win over the file.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .exploration import ExplorationConfig, MotionLimits
from .tags import NoiseModel
from .world import CameraModel


class ConfigError(ValueError):
    pass


@dataclass
class MappingConfig:
    # Map resolution comes from the world file (bundled worlds use 0.05 m).
    inflation_radius: float = 0.155  # robot radius 0.105 m + 0.05 m margin


@dataclass
class LidarConfig:
    n_beams: int = 240
    max_range: float = 10.0


@dataclass
class FrontierConfig:
    min_frontier_size: int = 8
    node_capacity: int = 16


@dataclass
class GreedyConfig:
    potential_scale: float = 4.0
    gain_scale: float = 1.0
    blacklist_timeout: float = 10.0
    blacklist_progress: float = 0.1
    blacklist_radius: float = 0.3


@dataclass
class FilterConfig:
    sigma0: float = 0.5
    base_bearing: float = 0.05
    base_elevation: float = 0.15707963267948966  # pi/20
    base_range: float = 0.15707963267948966
    range_exponent: float = 4.0

    def noise_model(self) -> NoiseModel:
        return NoiseModel(
            base_diag=(self.base_bearing, self.base_elevation, self.base_range),
            range_exponent=self.range_exponent,
        )


@dataclass
class MissionSettings:
    dt: float = 0.05
    scan_period: float = 0.3
    spin_duration: float = 4.0
    watchdog: float = 3600.0
    camera_height: float = 0.12
    start_x: float = float("nan")  # nan means auto-place near the map center
    start_y: float = float("nan")
    start_yaw: float = 0.0
    expected_tags: str = "all"  # "all", "none", or comma-separated ids
    waypoint_stride: int = 5
    goal_tolerance: float = 0.3
    max_goal_attempts: int = 25


@dataclass
class SimConfig:
    grid: MappingConfig = field(default_factory=MappingConfig)
    lidar: LidarConfig = field(default_factory=LidarConfig)
    camera: CameraModel = field(default_factory=CameraModel)
    exploration: ExplorationConfig = field(default_factory=ExplorationConfig)
    limits: MotionLimits = field(default_factory=MotionLimits)
    frontier: FrontierConfig = field(default_factory=FrontierConfig)
    greedy: GreedyConfig = field(default_factory=GreedyConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    mission: MissionSettings = field(default_factory=MissionSettings)

    def echo(self) -> dict:
        """JSON-ready snapshot of every parameter."""
        return dataclasses.asdict(self)


def _coerce(raw: str, current):
    raw = raw.strip()
    if isinstance(current, bool):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if isinstance(current, tuple):
        parts = [p for p in raw.replace(",", " ").split() if p]
        if len(parts) != len(current):
            raise ValueError(f"expected {len(current)} values, got {len(parts)}")
        return tuple(float(p) for p in parts)
    return raw


def apply_override(config: SimConfig, key: str, value: str):
    """Set one dotted parameter, e.g. camera.max_range = 4.0."""
    if "." not in key:
        raise ConfigError(f"key {key!r} must look like section.field")
    section_name, field_name = key.split(".", 1)
    section = getattr(config, section_name, None)
    if section is None or not dataclasses.is_dataclass(section):
        raise ConfigError(f"unknown config section {section_name!r}")
    if not hasattr(section, field_name):
        raise ConfigError(f"section {section_name!r} has no field {field_name!r}")
    current = getattr(section, field_name)
    try:
        setattr(section, field_name, _coerce(value, current))
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}")


def parse_config_text(text: str) -> list[tuple[int, str, str]]:
    """(line number, key, value) triples; raises with line numbers."""
    pairs = []
    for idx, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {idx}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"line {idx}: empty key or value")
        pairs.append((idx, key, value))
    return pairs


def load_config(
    path: str | Path | None = None,
    overrides: list[tuple[str, str]] | None = None,
) -> SimConfig:
    """Defaults, then the config file, then explicit overrides."""
    config = SimConfig()
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        for line_no, key, value in parse_config_text(text):
            try:
                apply_override(config, key, value)
            except ConfigError as exc:
                raise ConfigError(f"{path}: line {line_no}: {exc}")
    for key, value in overrides or []:
        apply_override(config, key, value)
    return config


def expected_tag_ids(setting: str, world_tag_ids: list[int]) -> set[int]:
    """Resolve the expected_tags config value against a world's tags."""
    setting = setting.strip().lower()
    if setting == "all":
        return set(world_tag_ids)
    if setting in ("none", ""):
        return set()
    try:
        return {int(part) for part in setting.replace(",", " ").split()}
    except ValueError:
        raise ConfigError(f"expected_tags must be 'all', 'none', or ids, got {setting!r}")
