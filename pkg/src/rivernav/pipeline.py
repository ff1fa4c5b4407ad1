"""Per-frame processing chain: radar frame -> targets -> tracks -> rules -> route.

One Pipeline instance owns the tracker state and is fed one radar
rotation at a time, from a replayed log or from the scenario engine.
Everything downstream of the raw scanlines happens here, in order:
frame assembly (dead-zone filter + chart overlay), blob extraction,
track update, rule classification and projection, and route repair.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .chart import Chart, OccupancyGrid, static_grid
from .colregs import ColregsParams, ProjectionPolygon, projection, situation_for_track
from .geometry import Polygon
from .planner import GlobalPath, ObstacleSet, PlannerParams, PlanPath, plan
from .radar import (
    OwnshipState,
    OwnshipTrack,
    RadarFrame,
    ScanLine,
    TargetCandidate,
    assemble_frame,
    extract_targets,
)
from .tracking import Track, Tracker, TrackerParams


@dataclass
class PipelineParams:
    intensity_threshold: int = 100
    max_dead_zone: float = 15.0
    min_target_cells: int = 3
    tracker: TrackerParams = field(default_factory=TrackerParams)
    colregs: ColregsParams = field(default_factory=ColregsParams)
    planner: PlannerParams = field(default_factory=PlannerParams)


@dataclass
class FrameResult:
    """Everything one rotation produced, for logging and rendering."""

    frame: RadarFrame
    candidates: list[TargetCandidate]
    land_objects: list[Polygon]
    tracks: list[Track]  # reported tracks only
    situations: dict[int, str]  # track id -> situation value
    projections: list[ProjectionPolygon]
    plan: PlanPath
    ownship: OwnshipState
    elapsed: float  # end-to-end wall seconds for this frame


class Pipeline:
    """Stateful frame processor bound to one chart and one global path."""

    def __init__(self, chart: Chart, global_path: GlobalPath, params: Optional[PipelineParams] = None):
        self.chart = chart
        self.global_path = global_path
        self.params = params or PipelineParams()
        self.grid: OccupancyGrid = static_grid(chart)
        self.tracker = Tracker(self.params.tracker)

    def process(self, lines: Sequence[ScanLine], ownship_track: OwnshipTrack) -> FrameResult:
        """Run one full rotation through every stage."""
        t_start = time.perf_counter()
        p = self.params

        frame = assemble_frame(
            lines, ownship_track, self.grid, p.intensity_threshold, p.max_dead_zone
        )
        candidates, land_objects = extract_targets(frame, self.chart, p.min_target_cells)
        self.tracker.step(candidates, frame.end_time)
        tracks = self.tracker.reported()

        own = ownship_track.state_at(frame.end_time)
        situations: dict[int, str] = {}
        projections: list[ProjectionPolygon] = []
        for track in tracks:
            situation = situation_for_track(own, track, p.colregs)
            situations[track.id] = situation.value
            proj = projection(track, situation, p.colregs)
            if proj is not None:
                projections.append(proj)

        obstacles = ObstacleSet(
            list(self.chart.land_polygons)
            + [t.latest_polygon for t in tracks if t.latest_polygon is not None]
            + [pr.polygon for pr in projections]
        )
        route = plan(own.position, self.global_path, obstacles, p.planner)

        return FrameResult(
            frame=frame,
            candidates=candidates,
            land_objects=land_objects,
            tracks=tracks,
            situations=situations,
            projections=projections,
            plan=route,
            ownship=own,
            elapsed=time.perf_counter() - t_start,
        )
