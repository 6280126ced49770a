"""Region-of-interest membership: which traffic participants matter to an ego
at a given frame, and which of the eleven named neighbor slots each occupies.

A participant is relevant when it occupies the ego lane or a directly
adjacent lane and its longitudinal center distance lies within
[-d_rear, +d_front], where the forward extent follows the ego speed and the
rearward extent follows the participant speed (a fast vehicle closing from
behind is relevant).  Both extents are time gaps with a minimum length so
standing traffic still has neighbors.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .config import RoiConfig
from .core import AgentState, Carriageway, LaneLayout, Track, agent_state


class RoiSlot(Enum):
    EGO_PRECEDING = "ego-preceding"
    EGO_SECOND_PRECEDING = "ego-second-preceding"
    EGO_FOLLOWING = "ego-following"
    LEFT_PRECEDING = "left-preceding"
    LEFT_SECOND_PRECEDING = "left-second-preceding"
    LEFT_ALONGSIDE = "left-alongside"
    LEFT_FOLLOWING = "left-following"
    RIGHT_PRECEDING = "right-preceding"
    RIGHT_SECOND_PRECEDING = "right-second-preceding"
    RIGHT_ALONGSIDE = "right-alongside"
    RIGHT_FOLLOWING = "right-following"


_MIRROR = {
    RoiSlot.LEFT_PRECEDING: RoiSlot.RIGHT_PRECEDING,
    RoiSlot.LEFT_SECOND_PRECEDING: RoiSlot.RIGHT_SECOND_PRECEDING,
    RoiSlot.LEFT_ALONGSIDE: RoiSlot.RIGHT_ALONGSIDE,
    RoiSlot.LEFT_FOLLOWING: RoiSlot.RIGHT_FOLLOWING,
}
MIRROR_SLOT: dict[RoiSlot, RoiSlot] = {
    **{s: s for s in (RoiSlot.EGO_PRECEDING, RoiSlot.EGO_SECOND_PRECEDING, RoiSlot.EGO_FOLLOWING)},
    **_MIRROR,
    **{v: k for k, v in _MIRROR.items()},
}


@dataclass(frozen=True)
class RoiMembership:
    """ROI decision for one ego at one frame.

    ``members`` maps each slotted vehicle to its slot; ``extras`` lists
    vehicles that satisfy the geometric membership rule but found their
    slot group already full (dense traffic).  Both count as relevant.
    """

    frame: int
    members: dict[int, RoiSlot]
    extras: tuple[int, ...]
    d_safety_front: float
    d_safety_rear: float

    @property
    def member_ids(self) -> tuple[int, ...]:
        return tuple(sorted([*self.members, *self.extras]))

    def occupant(self, slot: RoiSlot) -> int | None:
        for vid, s in self.members.items():
            if s is slot:
                return vid
        return None

    def slots(self) -> dict[RoiSlot, int]:
        return {slot: vid for vid, slot in self.members.items()}


def safety_distance(speed: float, cfg: RoiConfig = RoiConfig()) -> float:
    """Safety distance as a time gap: 1.8 s worth of travel at ``speed``."""
    if speed < 0.0:
        raise ValueError(f"speed must be non-negative, got {speed}")
    return cfg.time_gap_s * speed


def time_gap(rear: AgentState, front: AgentState, cfg: RoiConfig = RoiConfig()) -> float:
    """Bumper-to-bumper gap over the rear vehicle's speed, in seconds.

    Returns the standstill cap (100 s) when the rear vehicle is slower than
    0.1 m/s.  Overlapping bumpers yield a zero gap, never a negative one.
    """
    if front.point.x <= rear.point.x:
        raise ValueError(
            f"front vehicle {front.vehicle_id} is not ahead of {rear.vehicle_id}"
        )
    gap = max(front.rear - rear.front, 0.0)
    speed = max(rear.point.vx, 0.0)
    if speed < cfg.standstill_speed:
        return cfg.standstill_cap_s
    return gap / speed


def _forward_speed(state: AgentState) -> float:
    return max(state.point.vx, 0.0)


def assign_slots(
    ego: AgentState,
    candidates: list[AgentState],
    layout: LaneLayout,
    cfg: RoiConfig = RoiConfig(),
) -> RoiMembership:
    """Select ROI members among ``candidates`` and rank them into slots.

    Candidates must already be restricted to the ego's carriageway and
    exclude the ego itself.
    """
    d_front = max(safety_distance(_forward_speed(ego), cfg), cfg.min_extent_m)
    d_rear_nominal = max(safety_distance(_forward_speed(ego), cfg), cfg.min_extent_m)

    ego_lane = ego.point.lane_id
    left_lane = layout.neighbor(ego_lane, "left")
    right_lane = layout.neighbor(ego_lane, "right")

    # Geometric membership: lane adjacency plus the longitudinal window.
    per_lane: dict[str, list[tuple[float, AgentState]]] = {"ego": [], "left": [], "right": []}
    for cand in candidates:
        lane = cand.point.lane_id
        if lane == ego_lane:
            group = "ego"
        elif left_lane is not None and lane == left_lane:
            group = "left"
        elif right_lane is not None and lane == right_lane:
            group = "right"
        else:
            continue
        dx = cand.point.x - ego.point.x
        d_rear = max(safety_distance(_forward_speed(cand), cfg), cfg.min_extent_m)
        if -d_rear <= dx <= d_front:
            per_lane[group].append((dx, cand))

    members: dict[int, RoiSlot] = {}
    extras: list[int] = []

    def take(pool: list[tuple[float, AgentState]], slot: RoiSlot) -> None:
        if pool:
            _, best = pool.pop(0)
            members[best.vehicle_id] = slot

    for group, states in per_lane.items():
        ahead = sorted(
            [(dx, s) for dx, s in states if dx >= 0.0],
            key=lambda item: (item[0], item[1].vehicle_id),
        )
        behind = sorted(
            [(dx, s) for dx, s in states if dx < 0.0],
            key=lambda item: (-item[0], item[1].vehicle_id),
        )
        if group == "ego":
            take(ahead, RoiSlot.EGO_PRECEDING)
            take(ahead, RoiSlot.EGO_SECOND_PRECEDING)
            take(behind, RoiSlot.EGO_FOLLOWING)
        else:
            # Alongside: longitudinal overlap band scaled by the longer vehicle.
            band_pool = sorted(
                [
                    (dx, s)
                    for dx, s in ahead + behind
                    if abs(dx) <= max(ego.length, s.length)
                ],
                key=lambda item: (abs(item[0]), item[1].vehicle_id),
            )
            alongside = RoiSlot.LEFT_ALONGSIDE if group == "left" else RoiSlot.RIGHT_ALONGSIDE
            take(band_pool, alongside)
            taken = {vid for vid in members}
            ahead = [(dx, s) for dx, s in ahead if s.vehicle_id not in taken]
            behind = [(dx, s) for dx, s in behind if s.vehicle_id not in taken]
            if group == "left":
                take(ahead, RoiSlot.LEFT_PRECEDING)
                take(ahead, RoiSlot.LEFT_SECOND_PRECEDING)
                take(behind, RoiSlot.LEFT_FOLLOWING)
            else:
                take(ahead, RoiSlot.RIGHT_PRECEDING)
                take(ahead, RoiSlot.RIGHT_SECOND_PRECEDING)
                take(behind, RoiSlot.RIGHT_FOLLOWING)
        for _, s in ahead + behind:
            if s.vehicle_id not in members:
                extras.append(s.vehicle_id)

    return RoiMembership(
        frame=ego.point.frame,
        members=members,
        extras=tuple(sorted(extras)),
        d_safety_front=d_front,
        d_safety_rear=d_rear_nominal,
    )


def roi_membership(
    all_tracks: list[Track],
    ego_id: int,
    frame: int,
    layout: LaneLayout,
    cfg: RoiConfig = RoiConfig(),
) -> RoiMembership:
    """ROI membership for ``ego_id`` at ``frame`` over a full track list."""
    ego_track = next((t for t in all_tracks if t.track_id == ego_id), None)
    if ego_track is None or not ego_track.present_at(frame):
        raise KeyError(f"ego {ego_id} absent at frame {frame}")
    ego = agent_state(ego_track, frame)
    carriageway: Carriageway = ego_track.carriageway
    candidates = [
        agent_state(t, frame)
        for t in all_tracks
        if t.track_id != ego_id and t.carriageway is carriageway and t.present_at(frame)
    ]
    return assign_slots(ego, candidates, layout, cfg)
