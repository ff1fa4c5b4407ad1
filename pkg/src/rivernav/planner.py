"""Path repair around obstacle polygons: contour detours plus shortcutting.

The planner takes a predefined route, the current position, and the
current frame's obstacle polygons (land contours, tracked targets, and
rule projections) and emits a waypoint list whose segments avoid every
polygon interior.  It is a repair strategy rather than a graph search:
each crossing is replaced by the shorter half of the obstacle boundary,
pushed outward by a small clearance, and the result is then shortcut
back toward straight lines with an anchored backward scan.

Collision checks run on the vector polygons, never on the occupancy
grid, so grid resolution cannot produce false negatives.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .geometry import (
    EPS,
    DegenerateSplit,
    Polygon,
    Polyline,
    UtmPoint,
    distance,
    point_in_polygon,
    segment_polygon_intersections,
    split_contour,
    _locate_on_boundary,
)


class PlanStatus(enum.Enum):
    OK = "ok"
    ESCAPED = "escaped"
    STOP = "stop"


class NoSafePoint(RuntimeError):
    """No exterior point exists within the escape search radius."""


@dataclass(frozen=True)
class PlannerParams:
    clearance: float = math.sqrt(2.0)  # one grid-cell diagonal at 1 m cells
    search_radius: float = 100.0
    max_detours: int = 64


@dataclass(frozen=True)
class GlobalPath:
    """The predefined route for the whole trip."""

    waypoints: Polyline
    labels: Optional[tuple] = None

    def __post_init__(self):
        if self.labels is not None and len(self.labels) != len(self.waypoints.points):
            raise ValueError("labels must match waypoint count")

    @property
    def goal(self) -> UtmPoint:
        return self.waypoints.points[-1]


@dataclass(frozen=True)
class PlanPath:
    """Planner output.  waypoints is None exactly when status is STOP;
    otherwise the first waypoint is the current position."""

    waypoints: Optional[Polyline]
    status: PlanStatus


def _strict_inside(px: float, py: float, poly: Polygon, margin: float = EPS) -> bool:
    """True when (px, py) lies in the polygon interior, strictly off the
    boundary.  Points within ``margin`` of an edge count as boundary."""
    x0, y0, x1, y1 = poly.bbox
    if px < x0 - margin or px > x1 + margin or py < y0 - margin or py > y1 + margin:
        return False
    ax, ay = poly.xy[:, 0], poly.xy[:, 1]
    bx, by = poly.xy_next[:, 0], poly.xy_next[:, 1]
    dx, dy = bx - ax, by - ay
    seg_sq = dx * dx + dy * dy
    t = np.clip(((px - ax) * dx + (py - ay) * dy) / seg_sq, 0.0, 1.0)
    ex = px - (ax + t * dx)
    ey = py - (ay + t * dy)
    if float(np.min(ex * ex + ey * ey)) <= margin * margin:
        return False
    cond = (ay > py) != (by > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = ax + (py - ay) * dx / dy
    return int(np.count_nonzero(cond & (px < xi))) % 2 == 1


def _seg_param(a: UtmPoint, b: UtmPoint, p: UtmPoint) -> float:
    rx, ry = b.easting - a.easting, b.northing - a.northing
    denom = rx * rx + ry * ry
    if denom <= EPS * EPS:
        return 0.0
    t = ((p.easting - a.easting) * rx + (p.northing - a.northing) * ry) / denom
    return min(max(t, 0.0), 1.0)


class ObstacleSet:
    """Obstacle polygons for one planning call, with edge arrays stacked
    for vectorized collision queries."""

    __slots__ = ("polygons", "_poly_bbox", "_ea", "_eb", "_edge_bbox", "_edge_poly")

    def __init__(self, polygons: Iterable[Polygon]):
        self.polygons = list(polygons)
        n = len(self.polygons)
        if n:
            self._poly_bbox = np.array([p.bbox for p in self.polygons])
            self._ea = np.concatenate([p.xy for p in self.polygons])
            self._eb = np.concatenate([p.xy_next for p in self.polygons])
            self._edge_poly = np.concatenate(
                [np.full(len(p.ring), i) for i, p in enumerate(self.polygons)]
            )
            lo = np.minimum(self._ea, self._eb)
            hi = np.maximum(self._ea, self._eb)
            self._edge_bbox = np.hstack([lo, hi])
        else:
            self._poly_bbox = np.zeros((0, 4))
            self._ea = np.zeros((0, 2))
            self._eb = np.zeros((0, 2))
            self._edge_poly = np.zeros(0, dtype=int)
            self._edge_bbox = np.zeros((0, 4))

    def __len__(self) -> int:
        return len(self.polygons)

    def strictly_contains(self, p: Sequence[float]) -> bool:
        return self.containing(p) >= 0

    def containing(self, p: Sequence[float]) -> int:
        """Index of the first polygon whose interior strictly contains p,
        or -1."""
        px, py = float(p[0]), float(p[1])
        for i, poly in enumerate(self.polygons):
            if _strict_inside(px, py, poly):
                return i
        return -1

    def _candidate_polys(self, a: UtmPoint, b: UtmPoint) -> np.ndarray:
        if not self.polygons:
            return np.zeros(0, dtype=int)
        lo_x, hi_x = min(a.easting, b.easting), max(a.easting, b.easting)
        lo_y, hi_y = min(a.northing, b.northing), max(a.northing, b.northing)
        bb = self._poly_bbox
        ok = (
            (bb[:, 0] <= hi_x + EPS)
            & (bb[:, 2] >= lo_x - EPS)
            & (bb[:, 1] <= hi_y + EPS)
            & (bb[:, 3] >= lo_y - EPS)
        )
        return np.nonzero(ok)[0]

    def _any_proper_cross(self, a: UtmPoint, b: UtmPoint) -> bool:
        """Fast screen: does segment a-b properly cross any stacked edge?"""
        if not len(self._ea):
            return False
        lo_x, hi_x = min(a.easting, b.easting), max(a.easting, b.easting)
        lo_y, hi_y = min(a.northing, b.northing), max(a.northing, b.northing)
        eb = self._edge_bbox
        m = (
            (eb[:, 0] <= hi_x + EPS)
            & (eb[:, 2] >= lo_x - EPS)
            & (eb[:, 1] <= hi_y + EPS)
            & (eb[:, 3] >= lo_y - EPS)
        )
        if not m.any():
            return False
        pa, pb = self._ea[m], self._eb[m]
        rx, ry = b.easting - a.easting, b.northing - a.northing
        d1 = rx * (pa[:, 1] - a.northing) - ry * (pa[:, 0] - a.easting)
        d2 = rx * (pb[:, 1] - a.northing) - ry * (pb[:, 0] - a.easting)
        ex, ey = pb[:, 0] - pa[:, 0], pb[:, 1] - pa[:, 1]
        d3 = ex * (a.northing - pa[:, 1]) - ey * (a.easting - pa[:, 0])
        d4 = ex * (b.northing - pa[:, 1]) - ey * (b.easting - pa[:, 0])
        return bool(np.any((d1 * d2 < 0.0) & (d3 * d4 < 0.0)))

    def blocking_entry(self, poly: Polygon, a: UtmPoint, b: UtmPoint) -> Optional[float]:
        """First param along a->b at which travel through poly's interior
        begins, or None if the segment never runs strictly inside.

        Touching the boundary (a vertex graze or a collinear slide along
        an edge) does not block; only sub-intervals whose midpoint is
        strictly interior do.
        """
        hits = segment_polygon_intersections(a, b, poly)
        ts = [_seg_param(a, b, pt) for pt, _ in hits]
        events = [0.0] + ts + [1.0]
        for t0, t1 in zip(events, events[1:]):
            if t1 - t0 <= 1e-12:
                continue
            tm = 0.5 * (t0 + t1)
            mx = a.easting + tm * (b.easting - a.easting)
            my = a.northing + tm * (b.northing - a.northing)
            if _strict_inside(mx, my, poly):
                return t0
        return None

    def segment_blocked(self, a: UtmPoint, b: UtmPoint) -> bool:
        if self._any_proper_cross(a, b):
            return True
        for pi in self._candidate_polys(a, b):
            if self.blocking_entry(self.polygons[pi], a, b) is not None:
                return True
        return False

    def first_blocking(
        self, points: Sequence[UtmPoint]
    ) -> Optional[tuple[int, int, float]]:
        """Earliest interior crossing along a waypoint chain.

        Returns (polygon index, segment index, entry param) for the
        first obstacle met in travel order, or None if the chain is
        collision-free.
        """
        for i in range(len(points) - 1):
            a, b = points[i], points[i + 1]
            best: Optional[tuple[float, int]] = None
            for pi in self._candidate_polys(a, b):
                t = self.blocking_entry(self.polygons[pi], a, b)
                if t is None:
                    continue
                if best is None or (t, pi) < best:
                    best = (t, int(pi))
            if best is not None:
                return best[1], i, best[0]
        return None


def _ccw(poly: Polygon) -> Polygon:
    return poly if poly.signed_area > 0 else Polygon(tuple(reversed(poly.ring)))


def _edge_normals(poly: Polygon) -> np.ndarray:
    """Unit outward normals per edge of a counterclockwise polygon."""
    d = poly.xy_next - poly.xy
    length = np.hypot(d[:, 0], d[:, 1])
    return np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]


def _offset_arc(
    poly: Polygon, arc: Sequence[UtmPoint], clearance: float, tol: float = 1e-6
) -> list[UtmPoint]:
    """Push a boundary polyline outward by the clearance.

    Points interior to an edge move along that edge's outward normal;
    points at a vertex move along the miter of the two adjacent edge
    normals so both edges keep the full clearance (miter length capped
    at 4x for needle corners).
    """
    normals = _edge_normals(poly)
    ring = poly.ring
    m = len(ring)
    out: list[UtmPoint] = []
    for p in arc:
        i, t = _locate_on_boundary(poly, p, tol)
        k = -1
        if distance(p, ring[i]) <= tol:
            k = i
        elif distance(p, ring[(i + 1) % m]) <= tol:
            k = (i + 1) % m
        if k >= 0:
            n_in, n_out = normals[(k - 1) % m], normals[k]
            bis = n_in + n_out
            norm = math.hypot(bis[0], bis[1])
            if norm < 1e-12:  # spike: edges double back
                direction = n_out
                scale = clearance
            else:
                direction = bis / norm
                cos_half = math.sqrt(max(0.0, (1.0 + float(n_in @ n_out)) / 2.0))
                scale = clearance / max(cos_half, 0.25)
        else:
            direction = normals[i]
            scale = clearance
        out.append(
            UtmPoint(p.easting + scale * direction[0], p.northing + scale * direction[1])
        )
    return out


def detour(path: Polyline, poly: Polygon, clearance: float = math.sqrt(2.0)) -> Polyline:
    """Replace the sub-path crossing a polygon with its shorter boundary arc.

    The first entry and last exit crossing points bound the replaced
    stretch; the shorter of the two boundary arcs between them is taken
    and offset outward by the clearance.  A path that only grazes the
    boundary (vertex touch, edge slide) is returned unchanged.
    """
    pts = path.points
    events: list[tuple[int, float, UtmPoint]] = []
    for i in range(len(pts) - 1):
        a, b = pts[i], pts[i + 1]
        for pt, _edge in segment_polygon_intersections(a, b, poly):
            if events and distance(events[-1][2], pt) <= EPS:
                continue
            events.append((i, _seg_param(a, b, pt), pt))
    if len(events) < 2:
        return path
    i0, _, entry = events[0]
    i1, _, exit_pt = events[-1]
    if distance(entry, exit_pt) <= 1e-6:
        return path

    # Require an actual interior traversal between entry and exit;
    # otherwise the path merely touches the boundary.
    chain = [entry] + [pts[k] for k in range(i0 + 1, i1 + 1)] + [exit_pt]
    traversed = False
    for a, b in zip(chain, chain[1:]):
        if distance(a, b) <= EPS:
            continue
        mx = 0.5 * (a.easting + b.easting)
        my = 0.5 * (a.northing + b.northing)
        if _strict_inside(mx, my, poly):
            traversed = True
            break
    if not traversed:
        return path

    ccw = _ccw(poly)
    try:
        shorter, _ = split_contour(ccw, entry, exit_pt)
    except DegenerateSplit:
        return path
    arc = _offset_arc(ccw, shorter.points, clearance)
    return Polyline.cleaned(list(pts[: i0 + 1]) + arc + list(pts[i1 + 1 :]))


def refine(path: Polyline, obstacles: ObstacleSet) -> Polyline:
    """Anchored backward-scan shortcutting.

    From the current anchor, candidate points are scanned from the end
    of the path backwards; the first whose direct segment to the anchor
    is collision-free replaces everything between.  The anchor then
    advances to that point and the scan repeats until it reaches the
    end.  Never lengthens the path; O(n^2) segment checks worst case.
    """
    pts = path.points
    out: list[UtmPoint] = [pts[0]]
    anchor = 0
    last = len(pts) - 1
    while anchor < last:
        chosen = anchor + 1
        for j in range(last, anchor + 1, -1):
            if not obstacles.segment_blocked(pts[anchor], pts[j]):
                chosen = j
                break
        out.append(pts[chosen])
        anchor = chosen
    return Polyline.cleaned(out)


def escape(
    start: Sequence[float], obstacles: ObstacleSet, params: Optional[PlannerParams] = None
) -> UtmPoint:
    """Nearest point outside all obstacle polygons, offset by the clearance.

    Candidates are generated radially from the boundaries of every
    polygon containing the start: perpendicular foot points on each
    edge, the polygon vertices (mitered), and a dense fallback sampling
    at clearance spacing.  The closest candidate that lands outside all
    polygons wins; ties break on (northing, easting).

    Raises NoSafePoint when no candidate within search_radius is clear.
    """
    params = params or PlannerParams()
    sp = UtmPoint(float(start[0]), float(start[1]))
    containing = [
        i for i, poly in enumerate(obstacles.polygons) if point_in_polygon(sp, poly)
    ]
    if not containing:
        return sp

    candidates: list[UtmPoint] = []
    for idx in containing:
        poly = _ccw(obstacles.polygons[idx])
        normals = _edge_normals(poly)
        ax, ay = poly.xy[:, 0], poly.xy[:, 1]
        dx = poly.xy_next[:, 0] - ax
        dy = poly.xy_next[:, 1] - ay
        seg_sq = dx * dx + dy * dy
        t = np.clip(((sp.easting - ax) * dx + (sp.northing - ay) * dy) / seg_sq, 0.0, 1.0)
        fx, fy = ax + t * dx, ay + t * dy
        # Perpendicular feet, pushed out along the edge normal.
        interior = (t > 1e-9) & (t < 1 - 1e-9)
        for i in np.nonzero(interior)[0]:
            candidates.append(
                UtmPoint(
                    float(fx[i] + params.clearance * normals[i, 0]),
                    float(fy[i] + params.clearance * normals[i, 1]),
                )
            )
        # Vertices, pushed out along the miter direction.
        m = len(poly.ring)
        for k in range(m):
            bis = normals[(k - 1) % m] + normals[k]
            norm = math.hypot(bis[0], bis[1])
            if norm < 1e-12:
                continue
            candidates.append(
                UtmPoint(
                    poly.ring[k].easting + params.clearance * bis[0] / norm,
                    poly.ring[k].northing + params.clearance * bis[1] / norm,
                )
            )
        # Dense fallback samples along each edge.
        lengths = np.sqrt(seg_sq)
        for i in range(m):
            steps = int(lengths[i] // params.clearance)
            for j in range(1, steps + 1):
                u = j / (steps + 1)
                candidates.append(
                    UtmPoint(
                        float(ax[i] + u * dx[i] + params.clearance * normals[i, 0]),
                        float(ay[i] + u * dy[i] + params.clearance * normals[i, 1]),
                    )
                )

    ranked = sorted(
        candidates,
        key=lambda c: (round(distance(sp, c), 9), c.northing, c.easting),
    )
    for cand in ranked:
        if distance(sp, cand) > params.search_radius:
            continue
        if any(point_in_polygon(cand, poly) for poly in obstacles.polygons):
            continue
        return cand
    raise NoSafePoint("no exterior point within %.1f m of %r" % (params.search_radius, sp))


def _clip(global_path: GlobalPath, from_pt: UtmPoint) -> list[UtmPoint]:
    """Route from the closest point on the global path onward, prefixed
    with the current position."""
    pts = global_path.waypoints.points
    a = np.array([(p.easting, p.northing) for p in pts[:-1]])
    b = np.array([(p.easting, p.northing) for p in pts[1:]])
    d = b - a
    seg_sq = np.maximum((d * d).sum(axis=1), EPS * EPS)
    rel = np.array([from_pt.easting, from_pt.northing]) - a
    t = np.clip((rel * d).sum(axis=1) / seg_sq, 0.0, 1.0)
    feet = a + t[:, None] * d
    err = feet - np.array([from_pt.easting, from_pt.northing])
    i = int(np.argmin((err * err).sum(axis=1)))
    foot = UtmPoint(float(feet[i, 0]), float(feet[i, 1]))
    return list(Polyline.cleaned([from_pt, foot] + list(pts[i + 1 :])).points)


def plan(
    start: Sequence[float],
    global_path: GlobalPath,
    obstacles: ObstacleSet,
    params: Optional[PlannerParams] = None,
) -> PlanPath:
    """Full repair pipeline: clip, escape if needed, detour, refine.

    Stop is the failure channel: goal buried in an obstacle, no safe
    escape point, or a crossing that repeated detouring cannot clear.
    """
    params = params or PlannerParams()
    sp = UtmPoint(float(start[0]), float(start[1]))
    goal = global_path.goal
    if obstacles.strictly_contains(goal):
        return PlanPath(None, PlanStatus.STOP)
    if distance(sp, goal) <= EPS:
        return PlanPath(None, PlanStatus.STOP)

    escaped = False
    anchor = sp
    if obstacles.strictly_contains(sp):
        try:
            anchor = escape(sp, obstacles, params)
        except NoSafePoint:
            return PlanPath(None, PlanStatus.STOP)
        escaped = True

    pts = _clip(global_path, anchor)
    remaining = params.max_detours
    while True:
        hit = obstacles.first_blocking(pts)
        if hit is None:
            break
        if remaining <= 0:
            return PlanPath(None, PlanStatus.STOP)
        remaining -= 1
        new = detour(Polyline(pts), obstacles.polygons[hit[0]], params.clearance)
        if new.points == pts:
            return PlanPath(None, PlanStatus.STOP)
        pts = list(new.points)

    pts = list(refine(Polyline(pts), obstacles).points)
    if escaped:
        if distance(sp, pts[0]) > EPS:
            pts = [sp] + pts
        return PlanPath(Polyline(pts), PlanStatus.ESCAPED)
    return PlanPath(Polyline(pts), PlanStatus.OK)
