"""Electronic chart loading and the static land occupancy grid.

Chart file format (plain text, ``#`` starts a comment):

    GRID <origin_easting> <origin_northing> <cell_size_m> <width_cells> <height_cells>
    LAND <n_vertices>
    <easting> <northing>     # n_vertices lines, ring given open (no repeat
    ...                      # of the first vertex), any winding

Any malformed record fails the whole load with the offending line number.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import GridCoord, Polygon, UtmPoint, rasterize_polygon


class ChartParseError(ValueError):
    """Malformed chart text; carries the 1-based line number."""

    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        super().__init__("chart line %d: %s" % (line_no, reason))


class ChartValidationError(ValueError):
    """Structurally valid text describing an invalid chart."""


class OccupancyGrid:
    """Binary occupancy grid over a UTM-aligned area.

    ``cells[row, col]`` is True where occupied; see geometry module
    docstring for the cell indexing convention.
    """

    __slots__ = ("origin", "cell_size", "cells")

    def __init__(self, origin: UtmPoint, cell_size: float, cells: np.ndarray):
        if cell_size <= 0:
            raise ValueError("cell size must be positive")
        self.origin = UtmPoint(float(origin[0]), float(origin[1]))
        self.cell_size = float(cell_size)
        self.cells = cells

    @classmethod
    def empty(cls, origin: UtmPoint, cell_size: float, width: int, height: int) -> "OccupancyGrid":
        return cls(origin, cell_size, np.zeros((height, width), dtype=bool))

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    def utm_to_cell(self, p) -> GridCoord:
        s = self.cell_size
        return GridCoord(
            int(np.floor((p[0] - self.origin.easting) / s)),
            int(np.floor((p[1] - self.origin.northing) / s)),
        )

    def cell_center(self, coord) -> UtmPoint:
        s = self.cell_size
        return UtmPoint(
            self.origin.easting + (coord[0] + 0.5) * s,
            self.origin.northing + (coord[1] + 0.5) * s,
        )

    def in_bounds(self, coord) -> bool:
        return 0 <= coord[0] < self.width and 0 <= coord[1] < self.height

    def copy(self) -> "OccupancyGrid":
        return OccupancyGrid(self.origin, self.cell_size, self.cells.copy())


@dataclass(frozen=True)
class Chart:
    """Land polygons plus the geometry of the working grid."""

    land_polygons: tuple[Polygon, ...]
    origin: UtmPoint
    cell_size: float
    width: int
    height: int

    @property
    def extent(self) -> tuple[float, float, float, float]:
        """(min_e, min_n, max_e, max_n) of the gridded area."""
        return (
            self.origin.easting,
            self.origin.northing,
            self.origin.easting + self.width * self.cell_size,
            self.origin.northing + self.height * self.cell_size,
        )

    def contains(self, p) -> bool:
        e0, n0, e1, n1 = self.extent
        return e0 <= p[0] <= e1 and n0 <= p[1] <= n1


def _self_intersects(poly: Polygon) -> bool:
    """Proper crossing between any two non-adjacent edges."""
    n = len(poly.ring)
    a = poly.xy
    b = poly.xy_next
    for i in range(n - 2):
        # Skip the neighbours of edge i (shared-vertex contact is fine).
        js = np.arange(i + 2, n if i > 0 else n - 1)
        if js.size == 0:
            continue
        r = b[i] - a[i]
        qp = a[js] - a[i]
        qp2 = b[js] - a[i]
        d1 = r[0] * qp[:, 1] - r[1] * qp[:, 0]
        d2 = r[0] * qp2[:, 1] - r[1] * qp2[:, 0]
        s = b[js] - a[js]
        pq = a[i] - a[js]
        pq2 = b[i] - a[js]
        d3 = s[:, 0] * pq[:, 1] - s[:, 1] * pq[:, 0]
        d4 = s[:, 0] * pq2[:, 1] - s[:, 1] * pq2[:, 0]
        if bool(((d1 * d2 < 0) & (d3 * d4 < 0)).any()):
            return True
    return False


def load_chart(path) -> Chart:
    """Parse and validate a chart file.

    Raises:
        ChartParseError: malformed text (with line number).
        ChartValidationError: well-formed text, invalid chart (bad cell
            size, degenerate or self-intersecting polygon).
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw_lines = fh.readlines()

    records: list[tuple[int, list[str]]] = []
    for i, raw in enumerate(raw_lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if text:
            records.append((i, text.split()))

    if not records:
        raise ChartParseError(len(raw_lines) or 1, "empty chart (no GRID record)")

    line_no, fields = records[0]
    if fields[0] != "GRID":
        raise ChartParseError(line_no, "expected GRID record, got %r" % fields[0])
    if len(fields) != 6:
        raise ChartParseError(line_no, "GRID needs 5 fields, got %d" % (len(fields) - 1))
    try:
        origin = UtmPoint(float(fields[1]), float(fields[2]))
        cell_size = float(fields[3])
        width, height = int(fields[4]), int(fields[5])
    except ValueError as exc:
        raise ChartParseError(line_no, "bad GRID value: %s" % exc) from None

    polygons: list[Polygon] = []
    idx = 1
    while idx < len(records):
        line_no, fields = records[idx]
        if fields[0] != "LAND":
            raise ChartParseError(line_no, "expected LAND record, got %r" % fields[0])
        if len(fields) != 2:
            raise ChartParseError(line_no, "LAND needs 1 field, got %d" % (len(fields) - 1))
        try:
            n_verts = int(fields[1])
        except ValueError:
            raise ChartParseError(line_no, "bad LAND vertex count %r" % fields[1]) from None
        if n_verts < 3:
            raise ChartValidationError(
                "chart line %d: polygon with %d vertices (need at least 3)" % (line_no, n_verts)
            )
        idx += 1
        verts: list[UtmPoint] = []
        for k in range(n_verts):
            if idx >= len(records):
                raise ChartParseError(
                    records[-1][0], "truncated polygon: expected %d vertices, got %d" % (n_verts, k)
                )
            v_line, v_fields = records[idx]
            if len(v_fields) != 2:
                raise ChartParseError(v_line, "vertex needs 2 fields, got %d" % len(v_fields))
            try:
                verts.append(UtmPoint(float(v_fields[0]), float(v_fields[1])))
            except ValueError as exc:
                raise ChartParseError(v_line, "bad vertex value: %s" % exc) from None
            idx += 1
        try:
            poly = Polygon(verts, ensure_ccw=True)
        except ValueError as exc:
            raise ChartValidationError("chart line %d: %s" % (line_no, exc)) from None
        if _self_intersects(poly):
            raise ChartValidationError("chart line %d: self-intersecting polygon" % line_no)
        polygons.append(poly)

    if cell_size <= 0:
        raise ChartValidationError("cell size must be positive, got %g" % cell_size)
    if width < 1 or height < 1:
        raise ChartValidationError("grid must be at least 1x1, got %dx%d" % (width, height))

    return Chart(tuple(polygons), origin, cell_size, width, height)


def static_grid(chart: Chart) -> OccupancyGrid:
    """Rasterize the chart's land polygons into a fresh occupancy grid.

    Pure function of the chart: repeated calls return identical grids.
    Polygon parts outside the grid extent are clipped by rasterization.
    """
    grid = OccupancyGrid.empty(chart.origin, chart.cell_size, chart.width, chart.height)
    for poly in chart.land_polygons:
        rasterize_polygon(poly, grid)
    return grid
