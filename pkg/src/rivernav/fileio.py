"""Radar/odometry log format: read, write, validate.

Logs are comma-separated, one record per line::

    SCAN,<t>,<bearing_rad>,<i0>,...,<i511>
    ODOM,<t>,<easting>,<northing>,<heading_rad>,<speed>

The reader accepts plain text or gzip (by ``.gz`` suffix) and reports
errors with the offending line number.  Chart files live in
:mod:`rivernav.chart`; this module only adds the matching writer.
"""

from __future__ import annotations

import gzip
import math
from typing import Iterable, TextIO

import numpy as np

from .chart import Chart
from .geometry import UtmPoint
from .radar import SAMPLES_PER_LINE, OwnshipState, ScanLine


class ParseError(ValueError):
    """A structured text file failed validation."""

    def __init__(self, path: str, line_no: int, reason: str):
        super().__init__("%s:%d: %s" % (path, line_no, reason))
        self.path = path
        self.line_no = line_no
        self.reason = reason


def _open_text(path: str, mode: str) -> TextIO:
    if path.endswith(".gz"):
        return gzip.open(path, mode + "t", encoding="utf-8", newline="\n")
    return open(path, mode, encoding="utf-8", newline="\n")


# ---------------------------------------------------------------------------
# scan/odometry logs


def format_scan(line: ScanLine) -> str:
    return "SCAN,%r,%r,%s" % (
        line.timestamp,
        line.bearing,
        ",".join(str(int(v)) for v in line.samples),
    )


def format_odom(state: OwnshipState) -> str:
    return "ODOM,%r,%r,%r,%r,%r" % (
        state.timestamp,
        state.position.easting,
        state.position.northing,
        state.heading,
        state.speed,
    )


def write_log(path: str, records: Iterable[str]) -> None:
    with _open_text(path, "w") as fh:
        for record in records:
            fh.write(record)
            fh.write("\n")


def read_log(path: str, max_range: float) -> tuple[list[ScanLine], list[OwnshipState]]:
    """Parse a log into scanlines and odometry fixes (both time-ordered).

    max_range calibrates the scanlines' range axis; the wire format does
    not carry it.  Raises ParseError naming the first bad line.
    """
    scans: list[ScanLine] = []
    fixes: list[OwnshipState] = []
    last_t = -math.inf
    with _open_text(path, "r") as fh:
        for line_no, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text:
                continue
            fields = text.split(",")
            tag = fields[0]
            try:
                if tag == "SCAN":
                    if len(fields) != 3 + SAMPLES_PER_LINE:
                        raise ValueError(
                            "SCAN needs %d fields, got %d"
                            % (3 + SAMPLES_PER_LINE, len(fields))
                        )
                    t = float(fields[1])
                    bearing = float(fields[2])
                    samples = np.empty(SAMPLES_PER_LINE, dtype=np.uint8)
                    for i, v in enumerate(fields[3:]):
                        iv = int(v)
                        if not 0 <= iv <= 255:
                            raise ValueError("intensity %d out of range 0-255" % iv)
                        samples[i] = iv
                    scans.append(
                        ScanLine(
                            timestamp=t,
                            bearing=bearing,
                            samples=samples,
                            max_range=max_range,
                        )
                    )
                elif tag == "ODOM":
                    if len(fields) != 6:
                        raise ValueError("ODOM needs 6 fields, got %d" % len(fields))
                    t, e, n, heading, speed = (float(v) for v in fields[1:])
                    fixes.append(
                        OwnshipState(UtmPoint(e, n), heading, speed, t)
                    )
                else:
                    raise ValueError("unknown record type %r" % tag)
            except ParseError:
                raise
            except ValueError as exc:
                raise ParseError(path, line_no, str(exc)) from None
            if t < last_t:
                raise ParseError(
                    path, line_no, "timestamp %g decreases (previous %g)" % (t, last_t)
                )
            last_t = t
    return scans, fixes


# ---------------------------------------------------------------------------
# chart files (writer side; the parser is chart.load_chart)


def dump_chart(chart: Chart) -> str:
    """Render a chart as text in the format chart.load_chart accepts."""
    lines = [
        "GRID %r %r %r %d %d"
        % (
            chart.origin.easting,
            chart.origin.northing,
            chart.cell_size,
            chart.width,
            chart.height,
        )
    ]
    for poly in chart.land_polygons:
        lines.append("LAND %d" % len(poly.ring))
        for p in poly.ring:
            lines.append("%r %r" % (p.easting, p.northing))
    return "\n".join(lines) + "\n"


def save_chart(path: str, chart: Chart) -> None:
    with _open_text(path, "w") as fh:
        fh.write(dump_chart(chart))
