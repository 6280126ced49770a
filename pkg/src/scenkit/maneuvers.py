"""Rule-based maneuver labeling of traffic participants relative to the ego.

A decision tree is evaluated per frame on the lane relation, signed
longitudinal gap, relative speed, lane-change events and the participant's
longitudinal acceleration.  Consecutive equal labels merge into segments;
segments shorter than the configured minimum are absorbed into their
neighbors, so each participant ends up with a contiguous, non-overlapping
segmentation of its frames.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .config import ManeuverConfig
from .core import Scenario


class Maneuver(Enum):
    FOLLOWING = "following"
    APPROACHING = "approaching"
    FALLING_BEHIND = "falling-behind"
    OVERTAKING_LEFT = "overtaking-left"
    OVERTAKING_RIGHT = "overtaking-right"
    BEING_OVERTAKEN_LEFT = "being-overtaken-left"
    BEING_OVERTAKEN_RIGHT = "being-overtaken-right"
    CUT_IN_LEFT = "cut-in-left"
    CUT_IN_RIGHT = "cut-in-right"
    CUT_OUT_LEFT = "cut-out-left"
    CUT_OUT_RIGHT = "cut-out-right"
    PARALLEL_DRIVING = "parallel-driving"
    LEAD_BRAKING = "lead-braking"


_MIRROR_PAIRS = (
    (Maneuver.OVERTAKING_LEFT, Maneuver.OVERTAKING_RIGHT),
    (Maneuver.BEING_OVERTAKEN_LEFT, Maneuver.BEING_OVERTAKEN_RIGHT),
    (Maneuver.CUT_IN_LEFT, Maneuver.CUT_IN_RIGHT),
    (Maneuver.CUT_OUT_LEFT, Maneuver.CUT_OUT_RIGHT),
)
MIRROR_MANEUVER: dict[Maneuver, Maneuver] = {m: m for m in Maneuver}
for _left, _right in _MIRROR_PAIRS:
    MIRROR_MANEUVER[_left] = _right
    MIRROR_MANEUVER[_right] = _left


@dataclass(frozen=True)
class ManeuverSegment:
    tp_id: int
    maneuver: Maneuver
    start_frame: int
    end_frame: int

    @property
    def num_frames(self) -> int:
        return self.end_frame - self.start_frame + 1


@dataclass(frozen=True)
class LaneChangeEvent:
    """A detected lane-id crossing with lateral-velocity sign agreement."""

    frame: int
    from_lane: int
    to_lane: int


def detect_lane_changes(
    scenario: Scenario, vehicle_id: int, cfg: ManeuverConfig = ManeuverConfig()
) -> list[LaneChangeEvent]:
    """Lane-id changes of one vehicle inside the scenario window."""
    track = scenario.tracks[vehicle_id]
    layout = scenario.lanes
    start = max(track.initial_frame, scenario.initial_frame)
    end = min(track.final_frame, scenario.final_frame)
    events: list[LaneChangeEvent] = []
    for frame in range(start + 1, end + 1):
        prev = track.point_at(frame - 1)
        curr = track.point_at(frame)
        if curr.lane_id == prev.lane_id:
            continue
        direction = layout.center_of(curr.lane_id) - layout.center_of(prev.lane_id)
        if direction * curr.vy < 0 and abs(curr.vy) > cfg.lateral_vel_threshold:
            continue  # lane id flicker against the actual motion
        events.append(LaneChangeEvent(frame, prev.lane_id, curr.lane_id))
    return events


def _lane_relation(scenario: Scenario, ego_lane: int, tp_lane: int) -> str:
    if tp_lane == ego_lane:
        return "same"
    layout = scenario.lanes
    return "left" if layout.index_of(tp_lane) > layout.index_of(ego_lane) else "right"


def _base_label(
    scenario: Scenario, tp_id: int, frame: int, cfg: ManeuverConfig
) -> Maneuver:
    ego = scenario.ego_track.point_at(frame)
    tp = scenario.tracks[tp_id].point_at(frame)
    relation = _lane_relation(scenario, ego.lane_id, tp.lane_id)
    dx = tp.x - ego.x
    rel = tp.vx - ego.vx

    if relation == "same":
        if dx >= 0.0 and tp.ax < cfg.lead_brake_decel:
            return Maneuver.LEAD_BRAKING
        gap_rate = rel if dx >= 0.0 else -rel  # d|dx|/dt
        if gap_rate < -cfg.closing_speed_threshold:
            return Maneuver.APPROACHING
        if gap_rate > cfg.opening_speed_threshold:
            return Maneuver.FALLING_BEHIND
        return Maneuver.FOLLOWING

    ego_len = scenario.ego_track.length
    tp_len = scenario.tracks[tp_id].length
    in_band = abs(dx) <= max(ego_len, tp_len)
    if in_band and abs(rel) <= cfg.parallel_rel_speed:
        return Maneuver.PARALLEL_DRIVING
    if rel > cfg.closing_speed_threshold:
        return Maneuver.OVERTAKING_LEFT if relation == "left" else Maneuver.OVERTAKING_RIGHT
    if rel < -cfg.closing_speed_threshold:
        return (
            Maneuver.BEING_OVERTAKEN_LEFT
            if relation == "left"
            else Maneuver.BEING_OVERTAKEN_RIGHT
        )
    return Maneuver.PARALLEL_DRIVING


def _absorb_short(
    spans: list[list], min_frames: int
) -> list[list]:
    """Merge sub-minimum segments into their longer neighbor until stable."""
    spans = [list(s) for s in spans]
    while len(spans) > 1:
        short = [
            (s[2] - s[1] + 1, i)
            for i, s in enumerate(spans)
            if s[2] - s[1] + 1 < min_frames
        ]
        if not short:
            break
        _, idx = min(short)
        left = spans[idx - 1] if idx > 0 else None
        right = spans[idx + 1] if idx + 1 < len(spans) else None
        if left is not None and (
            right is None or (left[2] - left[1]) >= (right[2] - right[1])
        ):
            left[2] = spans[idx][2]
            del spans[idx]
        else:
            right[1] = spans[idx][1]
            del spans[idx]
        # Coalesce equal neighbors that may now touch.
        merged: list[list] = []
        for span in spans:
            if merged and merged[-1][0] is span[0] and merged[-1][2] + 1 == span[1]:
                merged[-1][2] = span[2]
            else:
                merged.append(span)
        spans = merged
    return spans


def classify_maneuvers(
    scenario: Scenario, tp_id: int, cfg: ManeuverConfig = ManeuverConfig()
) -> list[ManeuverSegment]:
    """Maneuver segmentation of one participant across the scenario window."""
    if tp_id not in scenario.participant_ids:
        raise KeyError(f"vehicle {tp_id} does not participate in scenario {scenario.ego_id}")
    track = scenario.tracks[tp_id]
    ego = scenario.ego_track
    start = max(track.initial_frame, scenario.initial_frame)
    end = min(track.final_frame, scenario.final_frame)
    if start > end:
        return []

    labels = [_base_label(scenario, tp_id, f, cfg) for f in range(start, end + 1)]

    # Lane-change crossings override the base labels around the event.
    half_window = max(1, round(cfg.lane_change_window_s / scenario.dt))
    layout = scenario.lanes
    for event in detect_lane_changes(scenario, tp_id, cfg):
        if not ego.present_at(event.frame):
            continue
        ego_lane = ego.point_at(event.frame).lane_id
        ego_lane_prev = ego.point_at(max(event.frame - 1, ego.initial_frame)).lane_id
        if event.to_lane == ego_lane and event.from_lane != ego_lane:
            came_from_left = layout.index_of(event.from_lane) > layout.index_of(ego_lane)
            label = Maneuver.CUT_IN_LEFT if came_from_left else Maneuver.CUT_IN_RIGHT
        elif event.from_lane == ego_lane_prev and event.to_lane != ego_lane:
            went_left = layout.index_of(event.to_lane) > layout.index_of(ego_lane)
            label = Maneuver.CUT_OUT_LEFT if went_left else Maneuver.CUT_OUT_RIGHT
        else:
            continue
        lo = max(start, event.frame - half_window)
        hi = min(end, event.frame + half_window)
        for f in range(lo, hi + 1):
            labels[f - start] = label

    # Merge equal runs, then absorb segments below the minimum duration.
    spans: list[list] = []
    for i, label in enumerate(labels):
        frame = start + i
        if spans and spans[-1][0] is label and spans[-1][2] + 1 == frame:
            spans[-1][2] = frame
        else:
            spans.append([label, frame, frame])
    min_frames = max(1, round(cfg.min_segment_s / scenario.dt))
    spans = _absorb_short(spans, min_frames)

    return [ManeuverSegment(tp_id, label, lo, hi) for label, lo, hi in spans]
