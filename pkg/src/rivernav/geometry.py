"""Planar geometry shared by every stage of the navigation pipeline.

Conventions used throughout the package:

* Positions are planar UTM meters, ``easting`` toward east and ``northing``
  toward north.  Headings are radians clockwise from north, so the unit
  vector of a heading ``h`` is ``(sin h, cos h)`` in (easting, northing).
* Grid cells are indexed ``(col, row)`` with ``col`` along easting.  Cell
  ``(c, r)`` of a grid with corner origin ``o`` and cell size ``s`` covers
  ``[o.e + c*s, o.e + (c+1)*s) x [o.n + r*s, o.n + (r+1)*s)``; its center is
  at ``o + ((c+0.5)*s, (r+0.5)*s)``.
* Containment is conservative: a point on a polygon boundary counts as
  inside.  The boundary tolerance is ``EPS`` meters.
"""

from __future__ import annotations

import math
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy import ndimage

# Point-on-boundary / intersection tolerance in meters.
EPS = 1e-9

TWO_PI = 2.0 * math.pi

# 8-connectivity structuring element for component labeling.
_EIGHT_CONN = np.ones((3, 3), dtype=int)


class UtmPoint(NamedTuple):
    easting: float
    northing: float


class GridCoord(NamedTuple):
    col: int
    row: int


class DegenerateSplit(ValueError):
    """Raised when a contour split is requested at coincident points."""


def normalize_angle(a: float) -> float:
    """Wrap an angle to [0, 2*pi)."""
    return a % TWO_PI


def angle_diff(a: float, b: float) -> float:
    """Signed difference a - b wrapped to (-pi, pi]."""
    d = (a - b) % TWO_PI
    if d > math.pi:
        d -= TWO_PI
    return d


def heading_to_unit(heading: float) -> tuple[float, float]:
    """Unit (easting, northing) vector of a clockwise-from-north heading."""
    return math.sin(heading), math.cos(heading)


def vector_heading(easting: float, northing: float) -> float:
    """Heading (clockwise from north) of an (easting, northing) vector."""
    return math.atan2(easting, northing) % TWO_PI


def distance(a: UtmPoint, b: UtmPoint) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


class Polygon:
    """Simple closed ring of UTM vertices.

    The ring is stored open (the closing edge back to the first vertex is
    implicit).  Outer boundaries are counter-clockwise; pass
    ``ensure_ccw=True`` to normalize the winding of untrusted input.
    Consecutive duplicate vertices (including an explicit closing vertex)
    are rejected; a non-consecutive repeated vertex is allowed so traced
    radar contours may pinch at diagonal cell junctions.
    """

    __slots__ = ("ring", "xy", "xy_next", "bbox")

    def __init__(self, ring: Iterable[Sequence[float]], ensure_ccw: bool = False):
        pts = [UtmPoint(float(p[0]), float(p[1])) for p in ring]
        if len(pts) < 3:
            raise ValueError("polygon needs at least 3 vertices, got %d" % len(pts))
        for a, b in zip(pts, pts[1:] + pts[:1]):
            if abs(a.easting - b.easting) <= EPS and abs(a.northing - b.northing) <= EPS:
                raise ValueError("polygon has a duplicate consecutive vertex at %r" % (a,))
        xy = np.array(pts, dtype=float)
        if ensure_ccw and _signed_area(xy) < 0.0:
            pts.reverse()
            xy = xy[::-1].copy()
        self.ring: tuple[UtmPoint, ...] = tuple(pts)
        self.xy = xy
        self.xy_next = np.roll(xy, -1, axis=0)
        self.bbox = (
            float(xy[:, 0].min()),
            float(xy[:, 1].min()),
            float(xy[:, 0].max()),
            float(xy[:, 1].max()),
        )

    def __len__(self) -> int:
        return len(self.ring)

    def __repr__(self) -> str:
        return "Polygon(%d vertices)" % len(self.ring)

    @property
    def signed_area(self) -> float:
        return _signed_area(self.xy)

    @property
    def perimeter(self) -> float:
        return float(np.hypot(*(self.xy_next - self.xy).T).sum())

    @property
    def centroid(self) -> UtmPoint:
        """Arithmetic mean of the vertices (not the area centroid)."""
        m = self.xy.mean(axis=0)
        return UtmPoint(float(m[0]), float(m[1]))

    def translated(self, de: float, dn: float) -> "Polygon":
        return Polygon([(p.easting + de, p.northing + dn) for p in self.ring])

    def bbox_overlaps(self, other: "Polygon", pad: float = EPS) -> bool:
        a, b = self.bbox, other.bbox
        return not (
            a[2] < b[0] - pad or b[2] < a[0] - pad or a[3] < b[1] - pad or b[3] < a[1] - pad
        )


class Polyline:
    """Open chain of at least two UTM points with no consecutive duplicates."""

    __slots__ = ("points",)

    def __init__(self, points: Iterable[Sequence[float]]):
        pts = [UtmPoint(float(p[0]), float(p[1])) for p in points]
        if len(pts) < 2:
            raise ValueError("polyline needs at least 2 points")
        for a, b in zip(pts, pts[1:]):
            if distance(a, b) <= EPS:
                raise ValueError("polyline has a duplicate consecutive point at %r" % (a,))
        self.points: list[UtmPoint] = pts

    @staticmethod
    def cleaned(points: Iterable[Sequence[float]]) -> "Polyline":
        """Build a polyline, silently dropping consecutive duplicates."""
        out: list[UtmPoint] = []
        for p in points:
            q = UtmPoint(float(p[0]), float(p[1]))
            if not out or distance(out[-1], q) > EPS:
                out.append(q)
        return Polyline(out)

    def __len__(self) -> int:
        return len(self.points)

    def length(self) -> float:
        xy = np.array(self.points, dtype=float)
        return float(np.hypot(*np.diff(xy, axis=0).T).sum())


def _signed_area(xy: np.ndarray) -> float:
    x, y = xy[:, 0], xy[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return float(0.5 * np.sum(x * yn - xn * y))


def points_in_polygon(points: np.ndarray, poly: Polygon, eps: float = EPS) -> np.ndarray:
    """Vectorized containment test; boundary (within eps) counts as inside.

    Args:
        points: (N, 2) array of (easting, northing).
        poly: polygon to test against.

    Returns:
        (N,) boolean array.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    x = pts[:, 0][:, None]
    y = pts[:, 1][:, None]
    ax = poly.xy[:, 0][None, :]
    ay = poly.xy[:, 1][None, :]
    bx = poly.xy_next[:, 0][None, :]
    by = poly.xy_next[:, 1][None, :]

    # Even-odd crossing count with a ray toward +easting.
    straddles = (ay > y) != (by > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_hit = ax + (y - ay) * (bx - ax) / (by - ay)
    crossings = straddles & (x < x_hit)
    inside = (crossings.sum(axis=1) % 2).astype(bool)

    # Points within eps of any edge count as inside regardless of parity.
    dx = bx - ax
    dy = by - ay
    seg_sq = dx * dx + dy * dy
    t = np.clip(((x - ax) * dx + (y - ay) * dy) / seg_sq, 0.0, 1.0)
    ex = x - (ax + t * dx)
    ey = y - (ay + t * dy)
    on_edge = ((ex * ex + ey * ey) <= eps * eps).any(axis=1)
    return inside | on_edge


def point_in_polygon(p: Sequence[float], poly: Polygon, eps: float = EPS) -> bool:
    """True if p is inside poly; the boundary counts as inside."""
    return bool(points_in_polygon(np.array([[p[0], p[1]]]), poly, eps)[0])


def _point_segment_dist(px, py, ax, ay, bx, by):
    """Distance from points (px, py) to segments (a, b); all broadcastable."""
    dx = bx - ax
    dy = by - ay
    seg_sq = dx * dx + dy * dy
    t = np.clip(((px - ax) * dx + (py - ay) * dy) / seg_sq, 0.0, 1.0)
    ex = px - (ax + t * dx)
    ey = py - (ay + t * dy)
    return np.sqrt(ex * ex + ey * ey)


def polygons_intersect(a: Polygon, b: Polygon, eps: float = EPS) -> bool:
    """True if the boundaries touch or cross, or one polygon contains the other."""
    if not a.bbox_overlaps(b, pad=eps):
        return False

    a1 = a.xy[:, None, :]
    a2 = a.xy_next[:, None, :]
    b1 = b.xy[None, :, :]
    b2 = b.xy_next[None, :, :]

    def cross(ux, uy, vx, vy):
        return ux * vy - uy * vx

    d1 = cross(a2[..., 0] - a1[..., 0], a2[..., 1] - a1[..., 1],
               b1[..., 0] - a1[..., 0], b1[..., 1] - a1[..., 1])
    d2 = cross(a2[..., 0] - a1[..., 0], a2[..., 1] - a1[..., 1],
               b2[..., 0] - a1[..., 0], b2[..., 1] - a1[..., 1])
    d3 = cross(b2[..., 0] - b1[..., 0], b2[..., 1] - b1[..., 1],
               a1[..., 0] - b1[..., 0], a1[..., 1] - b1[..., 1])
    d4 = cross(b2[..., 0] - b1[..., 0], b2[..., 1] - b1[..., 1],
               a2[..., 0] - b1[..., 0], a2[..., 1] - b1[..., 1])
    if bool(((d1 * d2 < 0) & (d3 * d4 < 0)).any()):
        return True

    # Touching contact: an endpoint of one boundary within eps of the other.
    for pts, other in ((a.xy, b), (b.xy, a)):
        d = _point_segment_dist(
            pts[:, 0][:, None], pts[:, 1][:, None],
            other.xy[:, 0][None, :], other.xy[:, 1][None, :],
            other.xy_next[:, 0][None, :], other.xy_next[:, 1][None, :],
        )
        if bool((d <= eps).any()):
            return True

    return point_in_polygon(a.ring[0], b, eps) or point_in_polygon(b.ring[0], a, eps)


def segment_polygon_intersections(
    start: Sequence[float], end: Sequence[float], poly: Polygon, eps: float = EPS
) -> list[tuple[UtmPoint, int]]:
    """All boundary intersections of a segment, ordered from ``start``.

    Tangential touches produce a single point; a collinear overlap with an
    edge produces the two endpoints of the overlapped stretch.  Points
    closer than eps to each other are merged (a crossing exactly at a
    shared vertex of two edges reports once).

    Returns:
        List of (point, edge_index) ordered by distance from start.
    """
    p0 = np.array([start[0], start[1]], dtype=float)
    p1 = np.array([end[0], end[1]], dtype=float)
    r = p1 - p0
    rlen = float(np.hypot(*r))
    if rlen <= EPS:
        raise ValueError("degenerate segment")

    a = poly.xy
    d = poly.xy_next - a
    dlen = np.hypot(d[:, 0], d[:, 1])
    qp = a - p0

    denom = r[0] * d[:, 1] - r[1] * d[:, 0]
    cross_qp_r = qp[:, 0] * r[1] - qp[:, 1] * r[0]
    cross_qp_d = qp[:, 0] * d[:, 1] - qp[:, 1] * d[:, 0]

    events: list[tuple[float, int]] = []  # (t along segment, edge index)
    tol_t = eps / rlen
    general = np.abs(denom) > EPS * rlen * dlen
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(general, cross_qp_d / denom, np.nan)
        u = np.where(general, cross_qp_r / denom, np.nan)
    tol_u = eps / dlen
    ok = general & (t >= -tol_t) & (t <= 1 + tol_t) & (u >= -tol_u) & (u <= 1 + tol_u)
    for i in np.nonzero(ok)[0]:
        events.append((float(np.clip(t[i], 0.0, 1.0)), int(i)))

    # Collinear overlaps: edge lies on the segment's carrier line.
    collinear = ~general & (np.abs(cross_qp_r) <= eps * rlen)
    for i in np.nonzero(collinear)[0]:
        t0 = float(np.dot(a[i] - p0, r) / (rlen * rlen))
        t1 = float(np.dot(a[i] + d[i] - p0, r) / (rlen * rlen))
        lo, hi = min(t0, t1), max(t0, t1)
        lo, hi = max(lo, 0.0), min(hi, 1.0)
        if lo <= hi + tol_t:
            events.append((lo, int(i)))
            if hi - lo > tol_t:
                events.append((hi, int(i)))

    events.sort()
    out: list[tuple[UtmPoint, int]] = []
    for t_ev, idx in events:
        pt = UtmPoint(float(p0[0] + t_ev * r[0]), float(p0[1] + t_ev * r[1]))
        if out and distance(out[-1][0], pt) <= eps:
            continue
        out.append((pt, idx))
    return out


def _locate_on_boundary(poly: Polygon, p: Sequence[float], tol: float) -> tuple[int, float]:
    """Return (edge index, param in [0,1]) of the boundary point nearest p."""
    px, py = float(p[0]), float(p[1])
    ax, ay = poly.xy[:, 0], poly.xy[:, 1]
    bx, by = poly.xy_next[:, 0], poly.xy_next[:, 1]
    dx, dy = bx - ax, by - ay
    seg_sq = dx * dx + dy * dy
    t = np.clip(((px - ax) * dx + (py - ay) * dy) / seg_sq, 0.0, 1.0)
    ex = px - (ax + t * dx)
    ey = py - (ay + t * dy)
    d2 = ex * ex + ey * ey
    i = int(np.argmin(d2))
    if d2[i] > tol * tol:
        raise ValueError("point %r is not on the polygon boundary" % (p,))
    return i, float(t[i])


def split_contour(
    poly: Polygon, entry: Sequence[float], exit: Sequence[float], tol: float = 1e-6
) -> tuple[Polyline, Polyline]:
    """Split a polygon boundary at two points into its two arcs.

    Both returned polylines run from ``entry`` to ``exit``; the shorter one
    comes first.  On an exact length tie the arc whose first interior
    vertex is smaller in row-major order (northing, then easting) comes
    first.  Raises DegenerateSplit when entry and exit coincide.
    """
    e_pt = UtmPoint(float(entry[0]), float(entry[1]))
    x_pt = UtmPoint(float(exit[0]), float(exit[1]))
    if distance(e_pt, x_pt) <= tol:
        raise DegenerateSplit("entry and exit coincide at %r" % (e_pt,))

    ei, et = _locate_on_boundary(poly, e_pt, tol)
    xi, xt = _locate_on_boundary(poly, x_pt, tol)

    m = len(poly.ring)

    def arc(i0: int, t0: float, p_from: UtmPoint, i1: int, t1: float, p_to: UtmPoint) -> list[UtmPoint]:
        """Boundary points from p_from to p_to walking in ring order."""
        pts = [p_from]
        if i0 == i1 and t1 >= t0:
            pts.append(p_to)
            return pts
        k = (i0 + 1) % m
        for _ in range(m):
            pts.append(poly.ring[k])
            if k == i1:
                break
            k = (k + 1) % m
        pts.append(p_to)
        return pts

    fwd_pts = arc(ei, et, e_pt, xi, xt, x_pt)
    bwd_pts = list(reversed(arc(xi, xt, x_pt, ei, et, e_pt)))

    fwd = Polyline.cleaned(fwd_pts)
    bwd = Polyline.cleaned(bwd_pts)
    lf, lb = fwd.length(), bwd.length()

    if math.isclose(lf, lb, rel_tol=1e-9, abs_tol=EPS):
        # Row-major tie-break on the first interior vertex of each arc.
        def key(pl: Polyline) -> tuple[float, float]:
            if len(pl.points) > 2:
                p = pl.points[1]
            else:
                p = UtmPoint(
                    0.5 * (pl.points[0].easting + pl.points[1].easting),
                    0.5 * (pl.points[0].northing + pl.points[1].northing),
                )
            return (p.northing, p.easting)

        return (fwd, bwd) if key(fwd) <= key(bwd) else (bwd, fwd)
    return (fwd, bwd) if lf < lb else (bwd, fwd)


def label_cell_components(cells: Iterable[GridCoord]) -> list[set[GridCoord]]:
    """Group cells into 8-connected components.

    Components are ordered by their smallest member in row-major order
    (row, then col), so output is deterministic for a given cell set.
    """
    unique = set((int(c), int(r)) for c, r in cells)
    if not unique:
        return []
    arr_cells = np.array(sorted(unique), dtype=int)
    c0, r0 = arr_cells[:, 0].min(), arr_cells[:, 1].min()
    w = arr_cells[:, 0].max() - c0 + 1
    h = arr_cells[:, 1].max() - r0 + 1
    occ = np.zeros((h, w), dtype=bool)
    occ[arr_cells[:, 1] - r0, arr_cells[:, 0] - c0] = True
    labels, n = ndimage.label(occ, structure=_EIGHT_CONN)
    groups: dict[int, set[GridCoord]] = {}
    for c, r in arr_cells:
        lab = int(labels[r - r0, c - c0])
        groups.setdefault(lab, set()).add(GridCoord(int(c), int(r)))
    return sorted(groups.values(), key=lambda g: min((r, c) for c, r in g))


def connected_components(grid) -> list[set[GridCoord]]:
    """8-connected components of an occupancy grid's set cells.

    Accepts anything with a boolean ``cells[row, col]`` array.  Ordering
    matches label_cell_components.
    """
    occ = np.argwhere(grid.cells)
    return label_cell_components(GridCoord(int(c), int(r)) for r, c in occ)


# Axis-aligned unit direction steps, used by the contour walk.
_CW_TURN = {(1, 0): (0, -1), (0, -1): (-1, 0), (-1, 0): (0, 1), (0, 1): (1, 0)}


def trace_contour(
    component: Iterable[GridCoord], origin: UtmPoint, cell_size: float
) -> Polygon:
    """Trace the outer boundary of a cell component into a UTM polygon.

    The boundary follows cell edges (rectilinear, CCW) with collinear runs
    merged.  At diagonal pinch points the walk prefers the clockwise turn,
    which keeps 8-connected components on a single outer loop; the pinch
    corner then appears twice in the ring.  Holes are discarded.
    """
    cells = set((int(c), int(r)) for c, r in component)
    if not cells:
        raise ValueError("empty component")

    # Directed boundary edges, CCW around occupied space: interior on the left.
    out_edges: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for c, r in cells:
        if (c, r - 1) not in cells:
            out_edges.setdefault((c, r), []).append((c + 1, r))
        if (c + 1, r) not in cells:
            out_edges.setdefault((c + 1, r), []).append((c + 1, r + 1))
        if (c, r + 1) not in cells:
            out_edges.setdefault((c + 1, r + 1), []).append((c, r + 1))
        if (c - 1, r) not in cells:
            out_edges.setdefault((c, r + 1), []).append((c, r))

    start = min(out_edges, key=lambda p: (p[1], p[0]))
    corners = [start]
    prev_dir: tuple[int, int] | None = None
    cur = start
    while True:
        outs = out_edges.get(cur, [])
        if len(outs) == 1 or prev_dir is None:
            nxt = min(outs)
        else:
            # Prefer the clockwise turn, then straight, then counter-clockwise.
            prefs = [_CW_TURN[prev_dir], prev_dir, _CW_TURN[_CW_TURN[_CW_TURN[prev_dir]]]]
            by_dir = {(n[0] - cur[0], n[1] - cur[1]): n for n in outs}
            nxt = next(by_dir[d] for d in prefs if d in by_dir)
        outs.remove(nxt)
        prev_dir = (nxt[0] - cur[0], nxt[1] - cur[1])
        cur = nxt
        if cur == start:
            break
        corners.append(cur)

    # Merge collinear runs; the closing corner at `start` is always a turn.
    ring: list[tuple[int, int]] = []
    n = len(corners)
    for i, p in enumerate(corners):
        a = corners[i - 1]
        b = corners[(i + 1) % n]
        if (p[0] - a[0], p[1] - a[1]) != (b[0] - p[0], b[1] - p[1]):
            ring.append(p)

    return Polygon(
        [(origin[0] + cx * cell_size, origin[1] + cy * cell_size) for cx, cy in ring],
        ensure_ccw=True,
    )


def rasterize_polygon(poly: Polygon, grid) -> None:
    """Set every grid cell whose center lies in the polygon (in place).

    Containment matches point_in_polygon exactly (boundary inclusive), so
    rasterization is monotone and idempotent.  Cells outside the grid are
    ignored.
    """
    s = float(grid.cell_size)
    o = grid.origin
    h, w = grid.cells.shape
    minx, miny, maxx, maxy = poly.bbox

    c0 = max(0, math.ceil((minx - EPS - o[0]) / s - 0.5))
    c1 = min(w - 1, math.floor((maxx + EPS - o[0]) / s - 0.5))
    r0 = max(0, math.ceil((miny - EPS - o[1]) / s - 0.5))
    r1 = min(h - 1, math.floor((maxy + EPS - o[1]) / s - 0.5))
    if c0 > c1 or r0 > r1:
        return

    xs = o[0] + (np.arange(c0, c1 + 1) + 0.5) * s
    ncols = xs.size
    chunk = max(1, 200_000 // ncols)
    for rb in range(r0, r1 + 1, chunk):
        re = min(r1, rb + chunk - 1)
        ys = o[1] + (np.arange(rb, re + 1) + 0.5) * s
        gx, gy = np.meshgrid(xs, ys)
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        mask = points_in_polygon(pts, poly).reshape(re - rb + 1, ncols)
        grid.cells[rb : re + 1, c0 : c1 + 1] |= mask
