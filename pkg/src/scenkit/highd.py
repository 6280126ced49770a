"""Parse and validate highD-format recordings into normalized Tracks.

A recording is a triplet ``NN_recordingMeta.csv`` / ``NN_tracksMeta.csv`` /
``NN_tracks.csv``.  Raw files use image coordinates (y grows downward,
positions are bounding-box top-left corners, the image-plane "width" is the
vehicle length).  Ingest converts to center positions and normalizes the
frame per carriageway so every vehicle travels toward +x with +y to the
driver's left.

The precomputed neighbor-id columns of tracks.csv are not trusted: ROI
membership is recomputed from geometry downstream.  When the columns are
present they are cross-checked against geometry and mismatches surface as
warnings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .core import (
    Carriageway,
    DataValidationError,
    LaneBand,
    LaneLayout,
    SchemaError,
    Track,
    TrackPoint,
    VehicleClass,
)

TRACKS_COLUMNS = (
    "frame", "id", "x", "y", "width", "height",
    "xVelocity", "yVelocity", "xAcceleration", "yAcceleration",
    "frontSightDistance", "backSightDistance", "dhw", "thw", "ttc",
    "precedingXVelocity", "precedingId", "followingId",
    "leftPrecedingId", "leftAlongsideId", "leftFollowingId",
    "rightPrecedingId", "rightAlongsideId", "rightFollowingId", "laneId",
)
TRACKS_REQUIRED = (
    "frame", "id", "x", "y", "width", "height",
    "xVelocity", "yVelocity", "xAcceleration", "yAcceleration", "laneId",
)
TRACKS_META_REQUIRED = (
    "id", "width", "height", "initialFrame", "finalFrame", "numFrames",
    "class", "drivingDirection",
)
RECORDING_META_REQUIRED = (
    "id", "frameRate", "numVehicles", "upperLaneMarkings", "lowerLaneMarkings",
)

SPEED_SANITY_BOUND = 100.0  # m/s
LANE_ENCLOSURE_TOL = 0.5    # m, slack for centers straddling a marking


@dataclass(frozen=True)
class RecordingMeta:
    """Static description of one recording, plus derived lane layouts."""

    recording_id: int
    frame_rate: float
    speed_limit: float | None
    lane_markings_upper: tuple[float, ...]
    lane_markings_lower: tuple[float, ...]
    num_vehicles: int
    upper_layout: LaneLayout
    lower_layout: LaneLayout
    ingest_warnings: tuple[str, ...] = ()

    @property
    def dt(self) -> float:
        return 1.0 / self.frame_rate

    def layout_for(self, carriageway: Carriageway) -> LaneLayout:
        return self.upper_layout if carriageway is Carriageway.UPPER else self.lower_layout


@dataclass
class ReportEntry:
    file: str
    row: int
    message: str


@dataclass
class ValidationReport:
    errors: list[ReportEntry] = field(default_factory=list)
    warnings: list[ReportEntry] = field(default_factory=list)
    vehicle_count: int = 0
    frame_count: int = 0

    @property
    def ok(self) -> bool:
        return not self.errors

    def summary(self) -> str:
        lines = [
            f"vehicles={self.vehicle_count} frames={self.frame_count} "
            f"errors={len(self.errors)} warnings={len(self.warnings)}"
        ]
        for e in self.errors:
            lines.append(f"ERROR {e.file}:{e.row}: {e.message}")
        for w in self.warnings:
            lines.append(f"WARN  {w.file}:{w.row}: {w.message}")
        return "\n".join(lines)


def _paths(data_dir: Path, recording_id: int) -> tuple[Path, Path, Path]:
    prefix = f"{recording_id:02d}"
    return (
        data_dir / f"{prefix}_recordingMeta.csv",
        data_dir / f"{prefix}_tracksMeta.csv",
        data_dir / f"{prefix}_tracks.csv",
    )


def _read_csv(path: Path, required: tuple[str, ...]) -> pd.DataFrame:
    if not path.is_file():
        raise FileNotFoundError(f"missing recording file: {path}")
    df = pd.read_csv(path)
    missing = [c for c in required if c not in df.columns]
    if missing:
        raise SchemaError(f"{path.name}: missing column(s) {', '.join(missing)}")
    return df


def _parse_markings(raw: object, label: str) -> tuple[float, ...]:
    try:
        values = tuple(sorted(float(tok) for tok in str(raw).split(";") if tok.strip()))
    except ValueError:
        raise SchemaError(f"cannot parse {label} markings: {raw!r}") from None
    if len(values) < 2:
        raise DataValidationError(f"{label} carriageway needs at least 2 lane markings")
    return values


def lane_layouts(
    upper_markings: tuple[float, ...], lower_markings: tuple[float, ...]
) -> tuple[LaneLayout, LaneLayout]:
    """Derive normalized per-carriageway layouts from raw marking offsets.

    Lane ids follow the highD convention: numbered top to bottom in image
    coordinates, starting at 2 for the topmost drivable lane, with one id
    skipped between the carriageways.
    """
    n_upper = len(upper_markings)
    upper_bands = [
        LaneBand(2 + i, upper_markings[i], upper_markings[i + 1])
        for i in range(n_upper - 1)
    ]
    # Upper carriageway keeps raw y; bands are already ascending.
    upper = LaneLayout(tuple(upper_bands))

    first_lower_id = n_upper + 2
    lower_bands = [
        LaneBand(first_lower_id + i, -lower_markings[i + 1], -lower_markings[i])
        for i in range(len(lower_markings) - 1)
    ]
    # Lower carriageway flips y; reverse so centers ascend.
    lower = LaneLayout(tuple(reversed(lower_bands)))
    return upper, lower


def normalize_rows(df: pd.DataFrame, carriageway: Carriageway) -> pd.DataFrame:
    """Corner-to-center conversion plus direction normalization, vectorized."""
    out = pd.DataFrame(index=df.index)
    out["frame"] = df["frame"].astype(int)
    cx = df["x"].to_numpy(float) + 0.5 * df["width"].to_numpy(float)
    cy = df["y"].to_numpy(float) + 0.5 * df["height"].to_numpy(float)
    vx = df["xVelocity"].to_numpy(float)
    vy = df["yVelocity"].to_numpy(float)
    ax = df["xAcceleration"].to_numpy(float)
    ay = df["yAcceleration"].to_numpy(float)
    if carriageway is Carriageway.UPPER:
        out["x"], out["y"] = -cx, cy
        out["vx"], out["vy"] = -vx, vy
        out["ax"], out["ay"] = -ax, ay
    else:
        out["x"], out["y"] = cx, -cy
        out["vx"], out["vy"] = vx, -vy
        out["ax"], out["ay"] = ax, -ay
    out["lane_id"] = df["laneId"].astype(int)
    return out


def _build_track(
    meta_row: pd.Series, rows: pd.DataFrame, tracks_file: str
) -> Track:
    track_id = int(meta_row["id"])
    direction = int(meta_row["drivingDirection"])
    if direction not in (1, 2):
        raise DataValidationError(
            f"{tracks_file}: track {track_id} has drivingDirection {direction}"
        )
    carriageway = Carriageway.UPPER if direction == 1 else Carriageway.LOWER

    frames = rows["frame"].to_numpy(int)
    if len(frames) == 0:
        raise DataValidationError(f"{tracks_file}: track {track_id} has no rows")
    if not np.all(np.diff(frames) == 1):
        raise DataValidationError(
            f"{tracks_file}: track {track_id} has non-contiguous frames"
        )
    expected = int(meta_row["finalFrame"]) - int(meta_row["initialFrame"]) + 1
    if len(frames) != expected or frames[0] != int(meta_row["initialFrame"]):
        raise DataValidationError(
            f"{tracks_file}: track {track_id} rows do not match tracksMeta frame range"
        )

    normalized = normalize_rows(rows, carriageway)
    points = tuple(
        TrackPoint(
            frame=int(r.frame), x=float(r.x), y=float(r.y),
            vx=float(r.vx), vy=float(r.vy), ax=float(r.ax), ay=float(r.ay),
            lane_id=int(r.lane_id),
        )
        for r in normalized.itertuples(index=False)
    )
    return Track(
        track_id=track_id,
        vehicle_class=VehicleClass.parse(str(meta_row["class"])),
        length=float(meta_row["width"]),   # image-plane width is the vehicle length
        width=float(meta_row["height"]),
        carriageway=carriageway,
        points=points,
        initial_frame=int(frames[0]),
        final_frame=int(frames[-1]),
        normalized=True,
    )


def _cross_check_neighbors(df: pd.DataFrame, tracks_file: str) -> list[ReportEntry]:
    """Compare the recorded precedingId/followingId columns with geometry."""
    warnings: list[ReportEntry] = []
    directions = {1: -1.0, 2: 1.0}
    work = df[["frame", "id", "x", "width", "laneId", "_direction"]].copy()
    work["x_center"] = work["x"] + 0.5 * work["width"]
    # Driving-direction position: larger means farther ahead.
    work["pos"] = work["x_center"] * work["_direction"].map(directions)
    work = work.sort_values(["frame", "laneId", "pos"], kind="mergesort")
    grp = work.groupby(["frame", "laneId"], sort=False)
    ahead = grp["id"].shift(-1).fillna(0).astype(int).to_numpy()
    behind = grp["id"].shift(1).fillna(0).astype(int).to_numpy()

    for column, expected in (("precedingId", ahead), ("followingId", behind)):
        if column not in df.columns:
            continue
        recorded = df.loc[work.index, column].fillna(0).astype(int).to_numpy()
        mismatches = int(np.count_nonzero(recorded != expected))
        if mismatches:
            warnings.append(
                ReportEntry(
                    tracks_file, 0,
                    f"{column} disagrees with recomputed geometry in "
                    f"{mismatches} of {len(recorded)} rows (column not trusted)",
                )
            )
    return warnings


def load_recording(
    data_dir: str | Path, recording_id: int
) -> tuple[RecordingMeta, list[Track]]:
    """Parse one recording triplet into normalized tracks.

    Raises FileNotFoundError for missing files, SchemaError for column
    mismatches and DataValidationError for structural defects such as frame
    gaps within a track.
    """
    data_dir = Path(data_dir)
    meta_path, tracks_meta_path, tracks_path = _paths(data_dir, recording_id)

    meta_df = _read_csv(meta_path, RECORDING_META_REQUIRED)
    if len(meta_df) != 1:
        raise SchemaError(f"{meta_path.name}: expected exactly one row")
    meta_row = meta_df.iloc[0]
    upper_markings = _parse_markings(meta_row["upperLaneMarkings"], "upper")
    lower_markings = _parse_markings(meta_row["lowerLaneMarkings"], "lower")
    upper_layout, lower_layout = lane_layouts(upper_markings, lower_markings)

    speed_limit: float | None
    if "speedLimit" in meta_df.columns:
        raw_limit = float(meta_row["speedLimit"])
        speed_limit = None if raw_limit < 0 else raw_limit
    else:
        speed_limit = None

    tracks_meta = _read_csv(tracks_meta_path, TRACKS_META_REQUIRED)
    tracks_df = _read_csv(tracks_path, TRACKS_REQUIRED)

    direction_by_id = dict(
        zip(tracks_meta["id"].astype(int), tracks_meta["drivingDirection"].astype(int))
    )
    unknown = set(tracks_df["id"].astype(int)) - set(direction_by_id)
    if unknown:
        raise DataValidationError(
            f"{tracks_path.name}: ids missing from tracksMeta: {sorted(unknown)[:5]}"
        )
    tracks_df = tracks_df.copy()
    tracks_df["_direction"] = tracks_df["id"].astype(int).map(direction_by_id)

    warnings = _cross_check_neighbors(tracks_df, tracks_path.name)

    tracks: list[Track] = []
    grouped = tracks_df.sort_values(["id", "frame"], kind="mergesort").groupby("id", sort=True)
    meta_by_id = tracks_meta.set_index(tracks_meta["id"].astype(int))
    for track_id, rows in grouped:
        tracks.append(_build_track(meta_by_id.loc[int(track_id)], rows, tracks_path.name))

    meta = RecordingMeta(
        recording_id=int(meta_row["id"]),
        frame_rate=float(meta_row["frameRate"]),
        speed_limit=speed_limit,
        lane_markings_upper=upper_markings,
        lane_markings_lower=lower_markings,
        num_vehicles=int(meta_row["numVehicles"]),
        upper_layout=upper_layout,
        lower_layout=lower_layout,
        ingest_warnings=tuple(w.message for w in warnings),
    )
    return meta, tracks


def validate_recording(meta: RecordingMeta, tracks: list[Track]) -> ValidationReport:
    """Run consistency checks over parsed tracks; failures land in the report."""
    report = ValidationReport()
    tracks_file = f"{meta.recording_id:02d}_tracks.csv"
    report.warnings.extend(ReportEntry(tracks_file, 0, msg) for msg in meta.ingest_warnings)

    total_frames = 0
    for track in tracks:
        tid = track.track_id
        total_frames += len(track.points)
        if not track.contiguous():
            report.errors.append(
                ReportEntry(tracks_file, tid, f"track {tid}: non-contiguous frames")
            )
        if track.length <= 0.0 or track.width <= 0.0:
            report.errors.append(
                ReportEntry(
                    tracks_file, tid,
                    f"track {tid}: non-positive dimensions "
                    f"{track.length} x {track.width}",
                )
            )
        if not track.normalized:
            report.errors.append(
                ReportEntry(tracks_file, tid, f"track {tid}: not normalized")
            )
        layout = meta.layout_for(track.carriageway)
        lane_ids = set(layout.lane_ids)
        for p in track.points:
            if abs(p.vx) >= SPEED_SANITY_BOUND or abs(p.vy) >= SPEED_SANITY_BOUND:
                report.errors.append(
                    ReportEntry(
                        tracks_file, tid,
                        f"track {tid}: speed beyond sanity bound at frame {p.frame}",
                    )
                )
                break
        for p in track.points:
            if p.lane_id not in lane_ids:
                report.errors.append(
                    ReportEntry(
                        tracks_file, tid,
                        f"track {tid}: lane {p.lane_id} not in carriageway layout",
                    )
                )
                break
            band = layout.band(p.lane_id)
            if not (band.y_low - LANE_ENCLOSURE_TOL <= p.y <= band.y_high + LANE_ENCLOSURE_TOL):
                report.errors.append(
                    ReportEntry(
                        tracks_file, tid,
                        f"track {tid}: center outside lane {p.lane_id} at frame {p.frame}",
                    )
                )
                break

    if meta.num_vehicles != len(tracks):
        report.warnings.append(
            ReportEntry(
                f"{meta.recording_id:02d}_recordingMeta.csv", 0,
                f"numVehicles={meta.num_vehicles} but {len(tracks)} tracks parsed",
            )
        )
    report.vehicle_count = len(tracks)
    report.frame_count = total_frames
    return report
