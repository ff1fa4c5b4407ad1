"""Marine radar scanline processing and target candidate extraction.

A rotating radar head reports one scanline per transmission: 512 intensity
samples (0..255) along a bearing measured clockwise from the vessel's bow.
Sample k covers ranges [k, k+1) * max_range / 512 and is georeferenced at
its bin center, so the range of sample k is (k + 0.5) * max_range / 512.

Processing order per rotation: dead-zone filtering of each line, overlay of
hot samples onto the chart grid using the ownship pose nearest the line's
timestamp, then 8-connected component extraction and contour tracing.
Components that intersect charted land are reported separately from
floating target candidates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .chart import Chart
from .geometry import (
    GridCoord,
    Polygon,
    UtmPoint,
    label_cell_components,
    polygons_intersect,
    trace_contour,
)

SAMPLES_PER_LINE = 512

# Nominal rotation period of the radar head, seconds.
ROTATION_PERIOD = 2.5

# A rotation counts as complete when its bearings span at least this
# fraction of a full circle (512 evenly spaced lines span 511/512 of one).
MIN_COVERAGE = 0.98


class IncompleteRotation(ValueError):
    """Scanlines handed to assemble_frame cover less than a full rotation."""


@dataclass
class ScanLine:
    """One radar transmission.

    Attributes:
        timestamp: seconds.
        bearing: radians clockwise from the bow, in [0, 2*pi).
        samples: uint8 array of SAMPLES_PER_LINE intensities.
        max_range: range of the last sample's outer edge, meters.
    """

    timestamp: float
    bearing: float
    samples: np.ndarray
    max_range: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.uint8)
        if self.samples.shape != (SAMPLES_PER_LINE,):
            raise ValueError(
                "scanline needs %d samples, got %r" % (SAMPLES_PER_LINE, self.samples.shape)
            )
        if not (0.0 <= self.bearing < 2 * math.pi):
            raise ValueError("bearing %r outside [0, 2*pi)" % self.bearing)
        if self.max_range <= 0:
            raise ValueError("max_range must be positive")

    def sample_range(self, k: int) -> float:
        return (k + 0.5) * self.max_range / SAMPLES_PER_LINE


@dataclass(frozen=True)
class OwnshipState:
    position: UtmPoint
    heading: float  # radians clockwise from north
    speed: float  # m/s
    timestamp: float


class OwnshipTrack:
    """Time-sorted ownship states with nearest-timestamp lookup."""

    def __init__(self, states: Iterable[OwnshipState]):
        self.states = sorted(states, key=lambda s: s.timestamp)
        if not self.states:
            raise ValueError("ownship track needs at least one state")
        self._times = np.array([s.timestamp for s in self.states])

    def state_at(self, t: float) -> OwnshipState:
        """State whose timestamp is nearest t (earlier one wins ties)."""
        i = int(np.searchsorted(self._times, t))
        if i <= 0:
            return self.states[0]
        if i >= len(self.states):
            return self.states[-1]
        before, after = self.states[i - 1], self.states[i]
        if t - before.timestamp <= after.timestamp - t:
            return before
        return after


@dataclass
class RadarFrame:
    """One full rotation overlaid on the chart grid."""

    start_time: float
    end_time: float
    occupied: set[GridCoord]
    ownship_at_start: OwnshipState


@dataclass
class TargetCandidate:
    """A non-land radar return blob, ready for tracking."""

    polygon: Polygon
    centroid: UtmPoint
    frame_time: float


def filter_dead_zone(line: ScanLine, max_dead_zone: float) -> ScanLine:
    """Suppress the near-field transmission hump of one scanline.

    The junction index is the minimum-intensity sample among those whose
    range is within max_dead_zone (ties go to the largest index); samples
    up to and including the junction are zeroed, samples past it are
    untouched.  Returns a new line; the input is not modified.
    """
    scale = line.max_range / SAMPLES_PER_LINE
    # Window: samples k with (k + 0.5) * scale <= max_dead_zone.
    n_window = int(math.floor(max_dead_zone / scale + 0.5))
    n_window = min(n_window, SAMPLES_PER_LINE)
    if n_window <= 0:
        return ScanLine(line.timestamp, line.bearing, line.samples.copy(), line.max_range)
    window = line.samples[:n_window]
    # argmin with ties to the largest index.
    junction = n_window - 1 - int(np.argmin(window[::-1]))
    samples = line.samples.copy()
    samples[: junction + 1] = 0
    return ScanLine(line.timestamp, line.bearing, samples, line.max_range)


def overlay_scanline(
    line: ScanLine, ownship: OwnshipState, grid, intensity_threshold: int
) -> set[GridCoord]:
    """Project one scanline's hot samples onto grid cells.

    A sample is hot when its intensity is >= intensity_threshold.  The beam
    direction is ownship heading plus bearing (both clockwise from north);
    sample k lands at ownship position + range_k * (sin, cos) of that
    angle.  Cells outside the grid are dropped.

    ``grid`` needs origin, cell_size, width and height attributes (a Chart
    or an OccupancyGrid both qualify).
    """
    hot = np.nonzero(line.samples >= intensity_threshold)[0]
    if hot.size == 0:
        return set()
    ranges = (hot + 0.5) * (line.max_range / SAMPLES_PER_LINE)
    theta = ownship.heading + line.bearing
    e = ownship.position.easting + ranges * math.sin(theta)
    n = ownship.position.northing + ranges * math.cos(theta)
    s = grid.cell_size
    cols = np.floor((e - grid.origin.easting) / s).astype(int)
    rows = np.floor((n - grid.origin.northing) / s).astype(int)
    ok = (cols >= 0) & (cols < grid.width) & (rows >= 0) & (rows < grid.height)
    return {GridCoord(int(c), int(r)) for c, r in zip(cols[ok], rows[ok])}


def split_rotations(lines: Sequence[ScanLine]) -> list[list[ScanLine]]:
    """Split a time-ordered scanline stream into rotations at bearing wrap."""
    rotations: list[list[ScanLine]] = []
    current: list[ScanLine] = []
    for line in lines:
        if current and line.bearing < current[-1].bearing:
            rotations.append(current)
            current = []
        current.append(line)
    if current:
        rotations.append(current)
    return rotations


def assemble_frame(
    lines: Sequence[ScanLine],
    ownship_track: OwnshipTrack,
    grid,
    intensity_threshold: int,
    max_dead_zone: float = 0.0,
) -> RadarFrame:
    """Build one RadarFrame from the scanlines of a single rotation.

    Each line is dead-zone filtered (when max_dead_zone > 0), then overlaid
    using the ownship state nearest its timestamp.  The frame's occupied
    set is the union of the per-line overlays.

    Raises:
        IncompleteRotation: bearings span less than MIN_COVERAGE * 2*pi.
    """
    if not lines:
        raise IncompleteRotation("no scanlines")
    ordered = sorted(lines, key=lambda l: (l.timestamp, l.bearing))
    bearings = np.unwrap(np.array([l.bearing for l in ordered]))
    span = float(bearings.max() - bearings.min())
    if span < MIN_COVERAGE * 2 * math.pi:
        raise IncompleteRotation(
            "bearing span %.3f rad covers only %.0f%% of a rotation"
            % (span, 100 * span / (2 * math.pi))
        )
    occupied: set[GridCoord] = set()
    for line in ordered:
        if max_dead_zone > 0.0:
            line = filter_dead_zone(line, max_dead_zone)
        state = ownship_track.state_at(line.timestamp)
        occupied |= overlay_scanline(line, state, grid, intensity_threshold)
    return RadarFrame(
        start_time=ordered[0].timestamp,
        end_time=ordered[-1].timestamp,
        occupied=occupied,
        ownship_at_start=ownship_track.state_at(ordered[0].timestamp),
    )


def assemble_frames(
    lines: Sequence[ScanLine],
    ownship_track: OwnshipTrack,
    grid,
    intensity_threshold: int,
    max_dead_zone: float = 0.0,
    drop_partial_tail: bool = True,
) -> list[RadarFrame]:
    """Assemble every complete rotation in a scanline stream.

    A trailing partial rotation is dropped when drop_partial_tail is set
    (the streaming case); otherwise it raises IncompleteRotation.
    """
    rotations = split_rotations(lines)
    frames = []
    for i, rot in enumerate(rotations):
        try:
            frames.append(
                assemble_frame(rot, ownship_track, grid, intensity_threshold, max_dead_zone)
            )
        except IncompleteRotation:
            if drop_partial_tail and i == len(rotations) - 1:
                continue
            raise
    return frames


def extract_targets(
    frame: RadarFrame, chart: Chart, min_target_cells: int = 3
) -> tuple[list[TargetCandidate], list[Polygon]]:
    """Split a frame's occupied cells into target candidates and land echoes.

    Components smaller than min_target_cells are discarded as noise.  A
    component whose contour intersects any charted land polygon is
    reported as a land object; everything else becomes a TargetCandidate
    whose centroid is the arithmetic mean of its contour vertices.
    """
    candidates: list[TargetCandidate] = []
    land_objects: list[Polygon] = []
    for comp in label_cell_components(frame.occupied):
        if len(comp) < min_target_cells:
            continue
        poly = trace_contour(comp, chart.origin, chart.cell_size)
        is_land = any(
            poly.bbox_overlaps(land) and polygons_intersect(poly, land)
            for land in chart.land_polygons
        )
        if is_land:
            land_objects.append(poly)
        else:
            candidates.append(
                TargetCandidate(polygon=poly, centroid=poly.centroid, frame_time=frame.end_time)
            )
    return candidates, land_objects
