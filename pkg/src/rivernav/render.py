"""Deterministic SVG snapshots of one processed radar frame.

Layer order (back to front): land, radar cells, target polygons,
projection polygons, track trails, planned path, ownship marker.
Identical inputs render byte-identical documents, so figures can be
diffed in tests like any other artifact.
"""

from __future__ import annotations

from typing import Optional

from .chart import Chart
from .pipeline import FrameResult

_LAND = "#30302a"
_WATER = "#0e2230"
_CELL = "#6e7258"
_TARGET = "#d03a2f"
_PROJECTION = "#2f6fd0"
_TRAIL = "#d8d8d8"
_PATH = "#f0c030"
_OWNSHIP = "#30c050"


def _fmt(value: float) -> str:
    text = "%.2f" % value
    return "0.00" if text == "-0.00" else text


class _Doc:
    def __init__(self, width: float, height: float):
        self.parts = [
            '<svg xmlns="http://www.w3.org/2000/svg" '
            'viewBox="0 0 %s %s" width="%s" height="%s">'
            % (_fmt(width), _fmt(height), _fmt(width), _fmt(height))
        ]

    def add(self, element: str) -> None:
        self.parts.append(element)

    def finish(self) -> str:
        self.parts.append("</svg>")
        return "\n".join(self.parts) + "\n"


def _points(doc_pts) -> str:
    return " ".join("%s,%s" % (_fmt(x), _fmt(y)) for x, y in doc_pts)


def render_frame(
    chart: Chart, result: Optional[FrameResult] = None, scale: float = 1.0
) -> str:
    """Render one frame (or just the chart, when result is None) as SVG."""
    e0, n0, e1, n1 = chart.extent

    def to_doc(e: float, n: float) -> tuple[float, float]:
        # SVG y grows downward; northing grows upward.
        return (e - e0) * scale, (n1 - n) * scale

    doc = _Doc((e1 - e0) * scale, (n1 - n0) * scale)
    doc.add(
        '<rect class="water" x="0" y="0" width="%s" height="%s" fill="%s"/>'
        % (_fmt((e1 - e0) * scale), _fmt((n1 - n0) * scale), _WATER)
    )

    doc.add('<g class="land" fill="%s">' % _LAND)
    for poly in chart.land_polygons:
        doc.add(
            '<polygon points="%s"/>'
            % _points(to_doc(p.easting, p.northing) for p in poly.ring)
        )
    doc.add("</g>")

    if result is None:
        return doc.finish()

    if result.frame.occupied:
        side = chart.cell_size * scale
        doc.add('<g class="cells" fill="%s">' % _CELL)
        for col, row in sorted(result.frame.occupied):
            x, y = to_doc(
                e0 + col * chart.cell_size, n0 + (row + 1) * chart.cell_size
            )
            doc.add(
                '<rect x="%s" y="%s" width="%s" height="%s"/>'
                % (_fmt(x), _fmt(y), _fmt(side), _fmt(side))
            )
        doc.add("</g>")

    if result.candidates:
        doc.add(
            '<g class="targets" fill="none" stroke="%s" stroke-width="%s">'
            % (_TARGET, _fmt(1.5 * scale))
        )
        for cand in result.candidates:
            doc.add(
                '<polygon points="%s"/>'
                % _points(to_doc(p.easting, p.northing) for p in cand.polygon.ring)
            )
        doc.add("</g>")

    if result.projections:
        doc.add(
            '<g class="projections" fill="%s" fill-opacity="0.35" stroke="%s">'
            % (_PROJECTION, _PROJECTION)
        )
        for proj in result.projections:
            doc.add(
                '<polygon points="%s"/>'
                % _points(to_doc(p.easting, p.northing) for p in proj.polygon.ring)
            )
        doc.add("</g>")

    if result.tracks:
        doc.add(
            '<g class="trails" fill="none" stroke="%s" stroke-width="%s">'
            % (_TRAIL, _fmt(1.0 * scale))
        )
        for track in sorted(result.tracks, key=lambda t: t.id):
            doc.add(
                '<polyline class="trail" data-id="%d" points="%s"/>'
                % (
                    track.id,
                    _points(to_doc(p.easting, p.northing) for _, p in track.history),
                )
            )
        doc.add("</g>")

    if result.plan.waypoints is not None:
        doc.add(
            '<polyline class="path" fill="none" stroke="%s" stroke-width="%s" '
            'points="%s"/>'
            % (
                _PATH,
                _fmt(2.0 * scale),
                _points(
                    to_doc(p.easting, p.northing)
                    for p in result.plan.waypoints.points
                ),
            )
        )

    ox, oy = to_doc(result.ownship.position.easting, result.ownship.position.northing)
    doc.add(
        '<circle class="ownship" cx="%s" cy="%s" r="%s" fill="%s"/>'
        % (_fmt(ox), _fmt(oy), _fmt(3.0 * scale), _OWNSHIP)
    )
    return doc.finish()
