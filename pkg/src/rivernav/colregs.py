"""Encounter classification and forbidden-area projection.

Encounters are classified from the heading difference diff = own - target
wrapped to (-180, 180] degrees:

    |diff| <= 45         overtaking (own must also be faster)
    45 < diff <= 135     target crossing from the right
    -135 <= diff < -45   target crossing from the left
    |diff| > 135         head-on

Each give-way situation projects a forbidden polygon around the target in
its body frame: the dilated hull plus a directional pad that blocks the
non-compliant side.  Head-on pads the target's starboard side (forcing a
port-to-port pass), overtaking pads the target's port side (forcing an
overtake on its starboard side), crossing-from-right pads ahead of the
target (forcing a pass astern), and crossing-from-left projects nothing
(stand on).  Head-on and overtaking pads also extend ahead of the target
so a pass cannot cut back across its bow between planning cycles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .geometry import Polygon, UtmPoint, angle_diff, rasterize_polygon, vector_heading
from .radar import OwnshipState
from .tracking import Track


class ColregsSituation(Enum):
    HEAD_ON = "head_on"
    OVERTAKING = "overtaking"
    CROSSING_FROM_RIGHT = "crossing_from_right"
    CROSSING_FROM_LEFT = "crossing_from_left"
    NOT_APPLICABLE = "not_applicable"


@dataclass
class ColregsParams:
    overtaking_bound: float = math.pi / 4  # |diff| at or below -> overtaking
    crossing_bound: float = 3 * math.pi / 4  # |diff| above -> head-on
    safety_margin: float = 10.0  # hull dilation, m
    lookahead: float = 30.0  # pad scaling horizon, s
    pad_min: float = 20.0  # directional pad floor, m
    activation_range: float = 200.0  # rule logic engages inside this range, m
    min_target_speed: float = 0.25  # slower targets are plain obstacles, m/s
    # Projection boxes exceed the dilated hull by this much on every side,
    # so containment is strict rather than edge-sharing.
    strict_pad: float = 0.5


@dataclass
class ProjectionPolygon:
    polygon: Polygon
    source_track: int
    situation: ColregsSituation
    created_at: float


def classify(theta_own: float, theta_target: float, params: ColregsParams | None = None) -> ColregsSituation:
    """Classify an encounter from the two headings (radians, cw from north)."""
    p = params or ColregsParams()
    diff = angle_diff(theta_own, theta_target)
    if abs(diff) <= p.overtaking_bound:
        return ColregsSituation.OVERTAKING
    if abs(diff) > p.crossing_bound:
        return ColregsSituation.HEAD_ON
    if diff > 0:
        return ColregsSituation.CROSSING_FROM_RIGHT
    return ColregsSituation.CROSSING_FROM_LEFT


def is_in_front(ownship: OwnshipState, track: Track, params: ColregsParams | None = None) -> bool:
    """True when the track sits within +-90 degrees of the bow and in range."""
    p = params or ColregsParams()
    de = track.position.easting - ownship.position.easting
    dn = track.position.northing - ownship.position.northing
    rng = math.hypot(de, dn)
    if rng > p.activation_range:
        return False
    if rng == 0.0:
        return True
    rel = angle_diff(vector_heading(de, dn), ownship.heading)
    return abs(rel) <= math.pi / 2 + 1e-12


def situation_for_track(
    ownship: OwnshipState, track: Track, params: ColregsParams | None = None
) -> ColregsSituation:
    """Full per-track rule decision used by the pipeline.

    Targets outside the activation cone, too slow to have a meaningful
    heading, or overtaken no faster than they move, are NOT_APPLICABLE.
    """
    p = params or ColregsParams()
    if not is_in_front(ownship, track, p):
        return ColregsSituation.NOT_APPLICABLE
    ve, vn = track.velocity
    speed = math.hypot(ve, vn)
    if speed < p.min_target_speed:
        return ColregsSituation.NOT_APPLICABLE
    situation = classify(ownship.heading, vector_heading(ve, vn), p)
    if situation is ColregsSituation.OVERTAKING and ownship.speed <= speed:
        return ColregsSituation.NOT_APPLICABLE
    return situation


def _body_frame_box(polygon: Polygon, heading: float) -> tuple[float, float, float, float]:
    """(u_min, u_max, v_min, v_max) of the polygon in the target body frame.

    u is along the heading, v positive to starboard.
    """
    f = np.array([math.sin(heading), math.cos(heading)])
    s = np.array([math.cos(heading), -math.sin(heading)])
    rel = polygon.xy
    u = rel @ f
    v = rel @ s
    return float(u.min()), float(u.max()), float(v.min()), float(v.max())


def _box_polygon(heading: float, u0: float, u1: float, v0: float, v1: float) -> Polygon:
    f = np.array([math.sin(heading), math.cos(heading)])
    s = np.array([math.cos(heading), -math.sin(heading)])
    corners = [u0 * f + v0 * s, u1 * f + v0 * s, u1 * f + v1 * s, u0 * f + v1 * s]
    return Polygon([(c[0], c[1]) for c in corners], ensure_ccw=True)


def dilated_hull(track: Track, margin: float) -> Polygon:
    """Target contour grown by the safety margin (body-frame box dilation)."""
    ve, vn = track.velocity
    heading = vector_heading(ve, vn)
    u0, u1, v0, v1 = _body_frame_box(track.latest_polygon, heading)
    return _box_polygon(heading, u0 - margin, u1 + margin, v0 - margin, v1 + margin)


def projection(
    track: Track, situation: ColregsSituation, params: ColregsParams | None = None
) -> ProjectionPolygon | None:
    """Forbidden polygon for one tracked give-way target, or None.

    The pad length scales with the target's speed over the lookahead
    horizon, floored at pad_min.  Stand-on situations (crossing from the
    left) and NOT_APPLICABLE project nothing.
    """
    p = params or ColregsParams()
    if situation in (ColregsSituation.CROSSING_FROM_LEFT, ColregsSituation.NOT_APPLICABLE):
        return None
    if track.latest_polygon is None:
        return None
    ve, vn = track.velocity
    speed = math.hypot(ve, vn)
    heading = vector_heading(ve, vn)
    pad = max(speed * p.lookahead, p.pad_min)
    m = p.safety_margin + p.strict_pad

    u0, u1, v0, v1 = _body_frame_box(track.latest_polygon, heading)
    u0, u1 = u0 - m, u1 + m
    v0, v1 = v0 - m, v1 + m
    if situation is ColregsSituation.HEAD_ON:
        u1 += pad  # ahead
        v1 += pad  # starboard
    elif situation is ColregsSituation.OVERTAKING:
        u1 += pad  # ahead
        v0 -= pad  # port
    elif situation is ColregsSituation.CROSSING_FROM_RIGHT:
        u1 += pad  # ahead only: force a pass astern
    box = _box_polygon(heading, u0, u1, v0, v1)
    return ProjectionPolygon(
        polygon=box,
        source_track=track.id,
        situation=situation,
        created_at=track.last_update,
    )


def apply_projections(grid, projections) -> None:
    """Rasterize every projection into the grid (in place, order-free)."""
    for proj in projections:
        rasterize_polygon(proj.polygon, grid)
