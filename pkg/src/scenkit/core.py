"""Shared domain types and frame/scene arithmetic used by every pipeline stage.

Coordinate convention: after ingest normalization every vehicle travels in
+x and +y points to the driver's left, regardless of which carriageway the
raw recording placed it on.  Positions refer to the bounding-box center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .config import DEFAULT_DT


class ScenkitError(Exception):
    """Base class for pipeline failures."""


class SchemaError(ScenkitError):
    """Input file does not match the expected column contract."""


class DataValidationError(ScenkitError):
    """Parsed data violates a structural invariant."""


class ClassificationError(ScenkitError):
    """A scenario cannot be assigned a functional class."""


class VehicleClass(Enum):
    CAR = "car"
    TRUCK = "truck"

    @classmethod
    def parse(cls, label: str) -> "VehicleClass":
        try:
            return cls(label.strip().lower())
        except ValueError:
            raise DataValidationError(f"unknown vehicle class: {label!r}") from None


class Carriageway(Enum):
    """Which side of the recorded road a vehicle drives on (raw image terms)."""

    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True)
class TrackPoint:
    """One vehicle state sample: center position, velocity, acceleration, lane."""

    frame: int
    x: float
    y: float
    vx: float
    vy: float
    ax: float
    ay: float
    lane_id: int


@dataclass(frozen=True)
class LaneBand:
    lane_id: int
    y_low: float
    y_high: float

    @property
    def center(self) -> float:
        return 0.5 * (self.y_low + self.y_high)


@dataclass(frozen=True)
class LaneLayout:
    """Lanes of one carriageway in normalized coordinates.

    Bands are ordered by ascending center y, i.e. from rightmost to leftmost
    lane in driving direction.
    """

    bands: tuple[LaneBand, ...]

    def __post_init__(self) -> None:
        if len(self.bands) < 1:
            raise DataValidationError("a carriageway needs at least one lane")
        centers = [b.center for b in self.bands]
        if centers != sorted(centers):
            raise DataValidationError("lane bands must be ordered by center y")

    @property
    def lane_ids(self) -> tuple[int, ...]:
        return tuple(b.lane_id for b in self.bands)

    def index_of(self, lane_id: int) -> int:
        for i, band in enumerate(self.bands):
            if band.lane_id == lane_id:
                return i
        raise KeyError(f"lane {lane_id} not in layout")

    def band(self, lane_id: int) -> LaneBand:
        return self.bands[self.index_of(lane_id)]

    def center_of(self, lane_id: int) -> float:
        return self.band(lane_id).center

    def lane_at(self, y: float) -> int | None:
        """Lane whose band encloses ``y``, or None when off the carriageway."""
        for band in self.bands:
            if band.y_low <= y <= band.y_high:
                return band.lane_id
        return None

    def neighbor(self, lane_id: int, side: str) -> int | None:
        """Adjacent lane id to the left or right in driving direction."""
        idx = self.index_of(lane_id)
        if side == "left":
            idx += 1
        elif side == "right":
            idx -= 1
        else:
            raise ValueError(f"side must be 'left' or 'right', got {side!r}")
        if 0 <= idx < len(self.bands):
            return self.bands[idx].lane_id
        return None

    def is_edge(self, lane_id: int, side: str) -> bool:
        return self.neighbor(lane_id, side) is None

    def mirrored(self) -> "LaneLayout":
        """Layout reflected about the carriageway center, lane ids reordered."""
        lo = self.bands[0].y_low
        hi = self.bands[-1].y_high
        pivot = lo + hi
        bands = tuple(
            LaneBand(orig.lane_id, pivot - src.y_high, pivot - src.y_low)
            for orig, src in zip(self.bands, reversed(self.bands))
        )
        return LaneLayout(bands)

    def mirror_lane(self, lane_id: int) -> int:
        """Lane id occupying the reflected position of ``lane_id``."""
        idx = self.index_of(lane_id)
        return self.bands[len(self.bands) - 1 - idx].lane_id


@dataclass(frozen=True)
class Track:
    """One vehicle's full kinematic record joined with its static metadata."""

    track_id: int
    vehicle_class: VehicleClass
    length: float
    width: float
    carriageway: Carriageway
    points: tuple[TrackPoint, ...]
    initial_frame: int
    final_frame: int
    normalized: bool = True

    def present_at(self, frame: int) -> bool:
        return self.initial_frame <= frame <= self.final_frame

    def point_at(self, frame: int) -> TrackPoint:
        if not self.present_at(frame):
            raise KeyError(f"track {self.track_id} absent at frame {frame}")
        return self.points[frame - self.initial_frame]

    def contiguous(self) -> bool:
        """Whether frames run initial..final with step 1 and matching length."""
        if self.final_frame - self.initial_frame + 1 != len(self.points):
            return False
        return all(
            p.frame == self.initial_frame + i for i, p in enumerate(self.points)
        )


@dataclass(frozen=True)
class AgentState:
    """A vehicle's state at one frame, joined with its dimensions."""

    vehicle_id: int
    point: TrackPoint
    length: float
    width: float

    @property
    def front(self) -> float:
        return self.point.x + 0.5 * self.length

    @property
    def rear(self) -> float:
        return self.point.x - 0.5 * self.length

    @property
    def speed(self) -> float:
        return math.hypot(self.point.vx, self.point.vy)


def agent_state(track: Track, frame: int) -> AgentState:
    return AgentState(track.track_id, track.point_at(frame), track.length, track.width)


@dataclass(frozen=True)
class Scene:
    """Snapshot of the ego and its relevant traffic participants at one frame."""

    frame: int
    ego_state: TrackPoint
    tp_states: dict[int, TrackPoint]
    roi_slots: dict[str, int]  # slot name -> vehicle id


@dataclass(frozen=True)
class Scenario:
    """An ego track joined with every participant that ever enters its ROI."""

    recording_id: int
    ego_id: int
    scenes: tuple[Scene, ...]
    participant_ids: frozenset[int]
    duration_s: float
    dt: float
    lanes: LaneLayout
    tracks: dict[int, Track] = field(repr=False)

    def __post_init__(self) -> None:
        if len(self.scenes) != scene_count(self.duration_s, self.dt):
            raise DataValidationError(
                f"scenario {self.ego_id}: {len(self.scenes)} scenes but "
                f"duration {self.duration_s} s at dt {self.dt}"
            )

    @property
    def ego_track(self) -> Track:
        return self.tracks[self.ego_id]

    @property
    def initial_frame(self) -> int:
        return self.scenes[0].frame

    @property
    def final_frame(self) -> int:
        return self.scenes[-1].frame

    def scene_at(self, frame: int) -> Scene:
        idx = frame - self.initial_frame
        if not 0 <= idx < len(self.scenes):
            raise KeyError(f"frame {frame} outside scenario window")
        return self.scenes[idx]

    def ego_agent(self, frame: int) -> AgentState:
        return agent_state(self.ego_track, frame)

    def tp_agent(self, tp_id: int, frame: int) -> AgentState:
        if tp_id not in self.participant_ids:
            raise KeyError(f"vehicle {tp_id} is not a scenario participant")
        return agent_state(self.tracks[tp_id], frame)


def scene_count(duration_s: float, dt: float = DEFAULT_DT) -> int:
    """Number of scenes in a scenario of the given duration.

    ``duration_s`` must be an integer multiple of ``dt`` (within 1e-9).
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if duration_s < dt:
        raise ValueError(f"duration {duration_s} shorter than one step {dt}")
    ratio = duration_s / dt
    m = round(ratio)
    if abs(ratio - m) * dt > 1e-9:
        raise ValueError(f"duration {duration_s} is not a multiple of dt {dt}")
    return int(m)


@dataclass(frozen=True)
class ScenarioWindow:
    """Ego presence window plus the free-driving flag."""

    initial_frame: int
    final_frame: int
    free_driving: bool


def scenario_window(ego: Track, memberships: dict[int, set[int]]) -> ScenarioWindow:
    """Frame range of the ego's presence; flags free driving when every
    per-frame ROI set in ``memberships`` is empty."""
    if not ego.points:
        raise ValueError("ego track is empty")
    free = all(not memberships.get(f) for f in range(ego.initial_frame, ego.final_frame + 1))
    return ScenarioWindow(ego.initial_frame, ego.final_frame, free)


def mirror_point(point: TrackPoint, pivot: float, lane_map: dict[int, int]) -> TrackPoint:
    """Reflect one state laterally about ``y = pivot / 2`` (pivot = y1 + y2)."""
    return TrackPoint(
        frame=point.frame,
        x=point.x,
        y=pivot - point.y,
        vx=point.vx,
        vy=-point.vy,
        ax=point.ax,
        ay=-point.ay,
        lane_id=lane_map[point.lane_id],
    )


def mirror_track(track: Track, layout: LaneLayout) -> Track:
    """Laterally mirrored copy of a normalized track."""
    pivot = layout.bands[0].y_low + layout.bands[-1].y_high
    lane_map = {lid: layout.mirror_lane(lid) for lid in layout.lane_ids}
    points = tuple(mirror_point(p, pivot, lane_map) for p in track.points)
    return Track(
        track_id=track.track_id,
        vehicle_class=track.vehicle_class,
        length=track.length,
        width=track.width,
        carriageway=track.carriageway,
        points=points,
        initial_frame=track.initial_frame,
        final_frame=track.final_frame,
        normalized=track.normalized,
    )
