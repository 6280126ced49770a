"""Pipeline configuration: every tunable constant, overridable from an INI file.

The config file is flat ``key = value`` text grouped into sections
(``[roi]``, ``[maneuvers]``, ``[challenger]``, ``[functional]``,
``[complexity]``, ``[weights]``, ``[criticality]``, ``[controller]``,
``[replay]``).  The path is taken from the ``SCENKIT_CONFIG`` environment
variable unless given explicitly.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
import os
from dataclasses import dataclass, field, fields
from pathlib import Path


CONFIG_ENV_VAR = "SCENKIT_CONFIG"

#: Recording time step: 25 Hz drone footage.
DEFAULT_DT = 0.04


class ConfigError(Exception):
    """Raised for malformed config files or invalid parameter combinations."""


@dataclass(frozen=True)
class RoiConfig:
    """Region-of-interest geometry."""

    time_gap_s: float = 1.8          # safety distance expressed as a time gap
    min_extent_m: float = 10.0       # floor so standing traffic still has neighbors
    standstill_speed: float = 0.1    # below this, time gaps are capped
    standstill_cap_s: float = 100.0  # cap replacing the standstill infinity


@dataclass(frozen=True)
class ManeuverConfig:
    """Thresholds of the rule-based per-frame maneuver tree."""

    closing_speed_threshold: float = 1.0   # m/s, gap shrinking -> approaching
    opening_speed_threshold: float = 1.0   # m/s, gap growing -> falling-behind
    lead_brake_decel: float = -2.0         # m/s^2, lead braking onset
    parallel_rel_speed: float = 2.0        # m/s, alongside band speed window
    lane_change_window_s: float = 0.5      # cut-in/out label half-window
    min_segment_s: float = 0.5             # shorter segments are absorbed
    lateral_vel_threshold: float = 0.15    # m/s, lane-change sign agreement


@dataclass(frozen=True)
class ChallengerConfig:
    """Trajectory prediction and conflict test parameters."""

    horizon_s: float = 4.0        # prediction horizon
    sample_step_s: float = 0.2    # prediction sampling step
    accel_decay_s: float = 2.0    # acceleration decays linearly to zero
    lateral_decay_s: float = 1.0  # lateral velocity decays linearly to zero
    sub_gap_threshold_s: float = 0.9  # predicted lead gap that forces a reaction


@dataclass(frozen=True)
class FunctionalConfig:
    """Functional-scenario classification window."""

    window_s: float = 2.0       # half-window around the challenger onset
    lc_lookback_s: float = 3.0  # how far back a lane-change start is searched
    lateral_vel_threshold: float = 0.15


@dataclass(frozen=True)
class ComplexityConfig:
    """Normalization constants of the 13 scene attributes."""

    slot_count: int = 11          # a1, a5 denominator
    speed_ref: float = 50.0       # a3 velocity normalization, m/s
    accel_ref: float = 4.0        # a3 acceleration normalization, m/s^2
    speed_std_ref: float = 10.0   # a4 pooled-speed-std normalization, m/s
    pair_gap_s: float = 1.8       # a5 dependency gap threshold
    predict_horizon_s: float = 1.0  # a6 lookback horizon
    predict_error_ref: float = 2.0  # a6 position-error normalization, m
    time_gap_ref_s: float = 1.8   # a7 / a8 free-action time gap
    occlusion_rays: int = 360     # a10 ray count (1 degree steps)
    tp_action_ref: float = 10.0   # a11 denominator
    brake_onset_decel: float = -2.0  # a11 / a13 braking onset threshold
    ttb_brake_decel: float = 8.0  # a12 assumed braking capability, m/s^2
    ttb_ref_s: float = 4.0        # a12 time-to-brake normalization
    ego_action_ref: float = 5.0   # a13 denominator
    class_low_bound: float = 1.0 / 3.0
    class_high_bound: float = 2.0 / 3.0


@dataclass(frozen=True)
class CriticalityConfig:
    ttc_cap_s: float = 10.0
    critical_ttc_s: float = 1.5


@dataclass(frozen=True)
class ControllerConfig:
    """Parameters of the simple automated driving function used for replay.

    ``set_speed`` of ``None`` means "use the recorded ego speed at the
    replay start frame".
    """

    set_speed: float | None = None
    acc_time_gap: float = 1.8        # s, desired time gap to the lead
    aeb_ttc_trigger: float = 1.5     # s, emergency braking threshold
    max_accel: float = 2.0           # m/s^2
    comfort_decel: float = -3.0      # m/s^2
    max_decel: float = -8.0          # m/s^2
    lane_change_gap: float = 1.8     # s, required fore/aft gap in target lane
    # Proportional-law gains and shaping constants.
    speed_gain: float = 0.4          # 1/s, set-speed tracking
    gap_gain: float = 0.1            # 1/s^2, gap error term
    rel_speed_gain: float = 0.6      # 1/s, relative speed term
    standstill_gap: float = 2.0      # m, buffer added to the desired gap
    slow_lead_margin: float = 2.0    # m/s below set speed that triggers a lane change
    lane_change_duration_s: float = 4.0  # sinusoidal lateral profile length
    lka_time_const_s: float = 1.0    # lane centering time constant

    def __post_init__(self) -> None:
        if not (self.max_decel < self.comfort_decel < 0.0 < self.max_accel):
            raise ConfigError(
                "controller requires max_decel < comfort_decel < 0 < max_accel, got "
                f"{self.max_decel}, {self.comfort_decel}, {self.max_accel}"
            )


@dataclass(frozen=True)
class ReplayConfig:
    min_scenario_s: float = 1.0  # trimmed scenarios shorter than this are rejected


#: Attribute weighting determined by the two-part expert survey.
DEFAULT_WEIGHTS: tuple[float, ...] = (
    0.01, 0.087, 0.087, 0.1, 0.087, 0.077, 0.087,
    0.087, 0.087, 0.087, 0.1, 0.02, 0.084,
)

WEIGHT_SUM_TOL = 1e-12


def validate_weights(weights: tuple[float, ...]) -> tuple[float, ...]:
    """Check the weight vector contract: 13 non-negative entries summing to 1."""
    if len(weights) != 13:
        raise ConfigError(f"expected 13 weights, got {len(weights)}")
    if any(w < 0.0 for w in weights):
        raise ConfigError("weights must be non-negative")
    total = math.fsum(weights)
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise ConfigError(f"weights must sum to 1, got {total!r}")
    return tuple(float(w) for w in weights)


@dataclass(frozen=True)
class PipelineConfig:
    """Aggregate of all stage configurations."""

    roi: RoiConfig = field(default_factory=RoiConfig)
    maneuvers: ManeuverConfig = field(default_factory=ManeuverConfig)
    challenger: ChallengerConfig = field(default_factory=ChallengerConfig)
    functional: FunctionalConfig = field(default_factory=FunctionalConfig)
    complexity: ComplexityConfig = field(default_factory=ComplexityConfig)
    criticality: CriticalityConfig = field(default_factory=CriticalityConfig)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    replay: ReplayConfig = field(default_factory=ReplayConfig)
    weights: tuple[float, ...] = DEFAULT_WEIGHTS

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", validate_weights(tuple(self.weights)))


_SECTIONS = {
    "roi": RoiConfig,
    "maneuvers": ManeuverConfig,
    "challenger": ChallengerConfig,
    "functional": FunctionalConfig,
    "complexity": ComplexityConfig,
    "criticality": CriticalityConfig,
    "controller": ControllerConfig,
    "replay": ReplayConfig,
}


def _coerce(raw: str, target_type: type):
    raw = raw.strip()
    if target_type is int:
        return int(raw)
    if raw.lower() in ("none", ""):
        return None
    return float(raw)


def load_config(path: str | os.PathLike | None = None) -> PipelineConfig:
    """Build a PipelineConfig from defaults, overlaid with an optional INI file.

    ``path`` falls back to the ``SCENKIT_CONFIG`` environment variable; with
    neither set, the built-in defaults are returned.
    """
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    if path is None:
        return PipelineConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")

    parser = configparser.ConfigParser()
    try:
        parser.read_string(path.read_text(encoding="utf-8"), source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    kwargs: dict[str, object] = {}
    for section, cls in _SECTIONS.items():
        if not parser.has_section(section):
            continue
        known = {f.name: f.type for f in fields(cls)}
        values: dict[str, object] = {}
        for key, raw in parser.items(section):
            if key not in known:
                raise ConfigError(f"unknown key [{section}] {key}")
            base = getattr(cls(), key) if key != "set_speed" else 1.0
            target = int if isinstance(base, int) and not isinstance(base, bool) else float
            try:
                values[key] = _coerce(raw, target)
            except ValueError as exc:
                raise ConfigError(f"bad value for [{section}] {key}: {raw!r}") from exc
        kwargs[section] = cls(**values) if values else cls()

    if parser.has_section("weights"):
        weights = [0.0] * 13
        seen = set()
        for key, raw in parser.items("weights"):
            if not key.startswith("w"):
                raise ConfigError(f"unknown key [weights] {key}")
            try:
                idx = int(key[1:])
            except ValueError as exc:
                raise ConfigError(f"unknown key [weights] {key}") from exc
            if not 1 <= idx <= 13:
                raise ConfigError(f"weight index out of range: {key}")
            weights[idx - 1] = float(raw)
            seen.add(idx)
        if len(seen) != 13:
            raise ConfigError("section [weights] must define w1..w13")
        kwargs["weights"] = tuple(weights)

    return PipelineConfig(**kwargs)  # type: ignore[arg-type]


def dump_config(cfg: PipelineConfig) -> str:
    """Render a config as INI text (the same format load_config reads)."""
    lines: list[str] = []
    for section, _ in _SECTIONS.items():
        lines.append(f"[{section}]")
        for f in fields(getattr(cfg, section)):
            value = getattr(getattr(cfg, section), f.name)
            lines.append(f"{f.name} = {'none' if value is None else value}")
        lines.append("")
    lines.append("[weights]")
    for i, w in enumerate(cfg.weights, start=1):
        lines.append(f"w{i} = {w}")
    lines.append("")
    return "\n".join(lines)


def load_weights_file(path: str | os.PathLike) -> tuple[float, ...]:
    """Read 13 whitespace/comma separated weights from a plain text file."""
    text = Path(path).read_text(encoding="utf-8")
    tokens = [tok for tok in text.replace(",", " ").split() if tok]
    try:
        weights = tuple(float(tok) for tok in tokens)
    except ValueError as exc:
        raise ConfigError(f"weights file {path} contains non-numeric entries") from exc
    return validate_weights(weights)


def replace(cfg: PipelineConfig, **sections) -> PipelineConfig:
    """Return a copy of ``cfg`` with whole sections replaced."""
    return dataclasses.replace(cfg, **sections)
