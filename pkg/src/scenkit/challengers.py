"""Challenger identification: participants that force an ego reaction.

Per scene, the ego and every ROI member are rolled 4 s ahead with a
constant-acceleration model whose acceleration decays linearly to zero over
2 s and whose lateral velocity decays to zero over 1 s (lane keeping).  A
participant challenges when the predicted bounding rectangles overlap at
any sample or the predicted same-lane time gap from the ego to a
participant ahead drops below half the ROI safety gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .config import ChallengerConfig
from .core import Scenario, TrackPoint


class ConflictType(Enum):
    PATH_OVERLAP = "path-overlap"
    SUB_SAFETY_GAP = "sub-safety-gap"


@dataclass(frozen=True)
class PredictedPath:
    origin_frame: int
    horizon: float
    samples: tuple[tuple[float, float, float], ...]  # (t, x, y)
    speeds: tuple[float, ...]                        # forward speed per sample


@dataclass(frozen=True)
class ChallengerEvent:
    tp_id: int
    onset_frame: int
    conflict_type: ConflictType
    min_predicted_gap: float


def _longitudinal(state: TrackPoint, t: float, decay_s: float) -> tuple[float, float]:
    """Closed-form (x offset, speed) under linearly decaying acceleration,
    with the forward speed floored at zero (no reversing)."""
    v0 = max(state.vx, 0.0)
    a0 = state.ax
    ta = decay_s

    def v_raw(tau: float) -> float:
        if tau <= ta:
            return v0 + a0 * (tau - tau * tau / (2.0 * ta))
        return v0 + a0 * ta / 2.0

    def x_raw(tau: float) -> float:
        if tau <= ta:
            return v0 * tau + a0 * (tau * tau / 2.0 - tau**3 / (6.0 * ta))
        x_ta = v0 * ta + a0 * ta * ta / 3.0
        return x_ta + (v0 + a0 * ta / 2.0) * (tau - ta)

    # Until the decay horizon the raw speed is monotone for either sign of
    # a0, constant afterwards, so a positive v_raw(t) rules out a stall.
    if a0 >= 0.0 or v_raw(t) > 0.0:
        return x_raw(t), max(v_raw(t), 0.0)

    # Deceleration that stalls the vehicle: find the zero crossing in [0, ta].
    disc = max(ta * ta + 2.0 * ta * v0 / a0, 0.0)
    t_stop = max(0.0, min(ta - math.sqrt(disc), ta))
    if t <= t_stop:
        return x_raw(t), max(v_raw(t), 0.0)
    return x_raw(t_stop), 0.0


def _lateral(state: TrackPoint, t: float, decay_s: float) -> float:
    """Lateral offset under linear lane-keeping decay of the drift velocity."""
    tl = decay_s
    if t <= tl:
        return state.vy * (t - t * t / (2.0 * tl))
    return state.vy * tl / 2.0


def predict_trajectory(
    state: TrackPoint,
    horizon: float,
    cfg: ChallengerConfig = ChallengerConfig(),
) -> PredictedPath:
    """Roll one state forward; samples every 0.2 s starting at t = 0."""
    if horizon <= 0.0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    steps = round(horizon / cfg.sample_step_s)
    samples = []
    speeds = []
    for k in range(steps + 1):
        t = k * cfg.sample_step_s
        dx, speed = _longitudinal(state, t, cfg.accel_decay_s)
        dy = _lateral(state, t, cfg.lateral_decay_s)
        samples.append((t, state.x + dx, state.y + dy))
        speeds.append(speed)
    return PredictedPath(
        origin_frame=state.frame,
        horizon=horizon,
        samples=tuple(samples),
        speeds=tuple(speeds),
    )


def _conflict(
    scenario: Scenario,
    ego_path: PredictedPath,
    tp_path: PredictedPath,
    ego_dims: tuple[float, float],
    tp_dims: tuple[float, float],
) -> tuple[ConflictType | None, float]:
    """First predicted conflict between two paths plus the minimum clearance."""
    cfg_gap = ChallengerConfig().sub_gap_threshold_s
    layout = scenario.lanes
    half_len = 0.5 * (ego_dims[0] + tp_dims[0])
    half_wid = 0.5 * (ego_dims[1] + tp_dims[1])

    conflict: ConflictType | None = None
    min_clearance = math.inf
    for k, (t, xe, ye) in enumerate(ego_path.samples):
        _, xt, yt = tp_path.samples[k]
        dx_excess = abs(xt - xe) - half_len
        dy_excess = abs(yt - ye) - half_wid
        min_clearance = min(min_clearance, max(dx_excess, dy_excess, 0.0))
        if conflict is None and dx_excess <= 0.0 and dy_excess <= 0.0:
            conflict = ConflictType.PATH_OVERLAP
            break
        if conflict is None:
            lane_e = layout.lane_at(ye)
            lane_t = layout.lane_at(yt)
            if lane_e is not None and lane_e == lane_t:
                gap = (xt - 0.5 * tp_dims[0]) - (xe + 0.5 * ego_dims[0])
                if gap > 0.0:
                    tg = gap / max(ego_path.speeds[k], 0.1)
                    if tg < cfg_gap:
                        conflict = ConflictType.SUB_SAFETY_GAP
                        break
    return conflict, (0.0 if min_clearance is math.inf else min_clearance)


def detect_challengers(
    scenario: Scenario, cfg: ChallengerConfig = ChallengerConfig()
) -> list[ChallengerEvent]:
    """All challenger events of a scenario, one per participant at most,
    ordered by onset frame (ties by vehicle id)."""
    ego_track = scenario.ego_track
    ego_dims = (ego_track.length, ego_track.width)
    events: dict[int, ChallengerEvent] = {}

    for scene in scenario.scenes:
        member_ids = [vid for vid in sorted(scene.tp_states) if vid not in events]
        if not member_ids:
            if len(events) == len(scenario.participant_ids):
                break
            continue
        ego_path = predict_trajectory(scene.ego_state, cfg.horizon_s, cfg)
        for vid in member_ids:
            tp_track = scenario.tracks[vid]
            tp_path = predict_trajectory(scene.tp_states[vid], cfg.horizon_s, cfg)
            conflict, clearance = _conflict(
                scenario, ego_path, tp_path, ego_dims, (tp_track.length, tp_track.width)
            )
            if conflict is not None:
                events[vid] = ChallengerEvent(
                    tp_id=vid,
                    onset_frame=scene.frame,
                    conflict_type=conflict,
                    min_predicted_gap=clearance,
                )
    return sorted(events.values(), key=lambda e: (e.onset_frame, e.tp_id))


def first_challenger(events: list[ChallengerEvent]) -> ChallengerEvent | None:
    """The decisive challenger: earliest onset, ties to the smaller id."""
    if not events:
        return None
    return min(events, key=lambda e: (e.onset_frame, e.tp_id))
