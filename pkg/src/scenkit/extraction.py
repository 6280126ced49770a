"""Per-ego scenario extraction.

Every vehicle of a recording is considered as ego once.  Traffic
participants join the ego's cluster the first frame they enter its ROI
(single-linkage agglomeration over the timeline) and keep their full state
history inside the window.  Scenarios whose ROI stays empty for the whole
presence window are free driving and dropped.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

from .config import RoiConfig
from .core import Scenario, Scene, Track, agent_state, scenario_window
from .highd import RecordingMeta
from .roi import assign_slots


@dataclass
class ExtractionStats:
    """Data-reduction funnel counters.

    ``scenarios_with_challenger`` stays None until challenger detection ran.
    """

    total_vehicles: int
    scenarios_after_free_driving_filter: int
    scenarios_with_challenger: int | None = None

    def check(self) -> None:
        if self.scenarios_after_free_driving_filter > self.total_vehicles:
            raise ValueError("funnel must be non-increasing")
        if (
            self.scenarios_with_challenger is not None
            and self.scenarios_with_challenger > self.scenarios_after_free_driving_filter
        ):
            raise ValueError("funnel must be non-increasing")


def _presence_index(tracks: list[Track]) -> dict[int, list[Track]]:
    index: dict[int, list[Track]] = defaultdict(list)
    for track in tracks:
        for frame in range(track.initial_frame, track.final_frame + 1):
            index[frame].append(track)
    return index


def extract_scenarios(
    meta: RecordingMeta,
    tracks: list[Track],
    roi_cfg: RoiConfig = RoiConfig(),
) -> list[Scenario]:
    """One candidate scenario per vehicle-as-ego, free driving dropped.

    Output is ordered by ascending ego id; both carriageways are mined
    independently.
    """
    by_id = {t.track_id: t for t in tracks}
    presence = _presence_index(tracks)

    scenarios: list[Scenario] = []
    for ego_id in sorted(by_id):
        ego = by_id[ego_id]
        layout = meta.layout_for(ego.carriageway)

        memberships = {}
        for frame in range(ego.initial_frame, ego.final_frame + 1):
            ego_state = agent_state(ego, frame)
            candidates = [
                agent_state(t, frame)
                for t in presence[frame]
                if t.track_id != ego_id and t.carriageway is ego.carriageway
            ]
            memberships[frame] = assign_slots(ego_state, candidates, layout, roi_cfg)

        window = scenario_window(
            ego, {f: set(m.member_ids) for f, m in memberships.items()}
        )
        if window.free_driving:
            continue

        scenes = []
        participants: set[int] = set()
        for frame in range(window.initial_frame, window.final_frame + 1):
            membership = memberships[frame]
            member_ids = membership.member_ids
            participants.update(member_ids)
            scenes.append(
                Scene(
                    frame=frame,
                    ego_state=ego.point_at(frame),
                    tp_states={vid: by_id[vid].point_at(frame) for vid in member_ids},
                    roi_slots={
                        slot.value: vid for vid, slot in membership.members.items()
                    },
                )
            )

        scenario_tracks = {ego_id: ego}
        scenario_tracks.update({vid: by_id[vid] for vid in sorted(participants)})
        scenarios.append(
            Scenario(
                recording_id=meta.recording_id,
                ego_id=ego_id,
                scenes=tuple(scenes),
                participant_ids=frozenset(participants),
                duration_s=len(scenes) * meta.dt,
                dt=meta.dt,
                lanes=layout,
                tracks=scenario_tracks,
            )
        )
    return scenarios


def vehicles_per_scenario(scenario: Scenario) -> int:
    """Number of involved vehicles; the ego is counted too."""
    return len(scenario.participant_ids) + 1
