"""Flat key = value configuration for the command-line tools.

Every key has a default; a missing file or an empty file means "all
defaults".  Unknown or duplicate keys are hard errors so that a typo in
a safety-relevant tuning value cannot silently fall back to the default.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Optional

from .chart import Chart
from .colregs import ColregsParams
from .geometry import Polyline
from .pipeline import PipelineParams
from .planner import PlannerParams
from .tracking import KfParams, TrackerParams


class ConfigError(ValueError):
    """Bad configuration file or value."""


# key -> (default, kind).  Kind "int" rejects fractional values; angles
# are radians, distances meters, durations seconds.
DEFAULTS: dict[str, tuple] = {
    # Resolution of the occupancy grid land is rasterized into.  0 keeps
    # the chart file's native cell size; any other value re-grids the
    # chart to that resolution while preserving its physical extent.
    "grid.cell_size": (0.0, "float"),
    # The log wire format carries no range axis, so replay needs the
    # radar's configured maximum range to calibrate each scanline.
    "radar.max_range": (250.0, "float"),
    "radar.intensity_threshold": (100, "int"),
    "radar.max_dead_zone": (15.0, "float"),
    "radar.min_target_cells": (3, "int"),
    "tracker.sigma_ax": (0.5, "float"),
    "tracker.sigma_ay": (0.5, "float"),
    "tracker.sigma_px": (3.0, "float"),
    "tracker.sigma_py": (3.0, "float"),
    "tracker.init_pos_var": (9.0, "float"),
    "tracker.init_vel_var": (25.0, "float"),
    "tracker.range_max": (25.0, "float"),
    "tracker.pdf_threshold": (1e-6, "float"),
    "tracker.max_misses": (2, "int"),
    "tracker.min_updates": (2, "int"),
    "colregs.overtaking_bound": (math.pi / 4, "float"),
    "colregs.crossing_bound": (3 * math.pi / 4, "float"),
    "colregs.safety_margin": (10.0, "float"),
    "colregs.lookahead": (30.0, "float"),
    "colregs.pad_min": (20.0, "float"),
    "colregs.activation_range": (200.0, "float"),
    "colregs.min_target_speed": (0.25, "float"),
    "colregs.strict_pad": (0.5, "float"),
    "planner.clearance": (math.sqrt(2.0), "float"),
    "planner.search_radius": (100.0, "float"),
    "planner.max_detours": (64, "int"),
    # Route for replay, "e,n; e,n; ..." — empty derives a straight leg
    # from the first to the last odometry fix in the log.
    "global_path": ("", "str"),
}

# Keys that must be strictly positive.  grid.cell_size admits the 0
# sentinel and global_path is text; everything else is a magnitude.
_NON_POSITIVE_OK = {"grid.cell_size", "global_path", "colregs.min_target_speed"}


@dataclass(frozen=True)
class Config:
    """Validated configuration, ready to hand to the pipeline."""

    pipeline: PipelineParams
    max_range: float
    cell_size: float  # 0.0 = keep chart native
    global_path: Optional[Polyline]


def parse_config(path: Optional[str]) -> dict[str, str]:
    """Read raw key/value strings; None means no file (all defaults)."""
    values: dict[str, str] = {}
    if path is None:
        return values
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(
                    "%s:%d: expected key = value, got %r" % (path, line_no, text)
                )
            key, _, value = text.partition("=")
            key = key.strip()
            if key not in DEFAULTS:
                raise ConfigError("%s:%d: unknown key %r" % (path, line_no, key))
            if key in values:
                raise ConfigError("%s:%d: duplicate key %r" % (path, line_no, key))
            values[key] = value.strip()
    return values


def _convert(key: str, text: str):
    default, kind = DEFAULTS[key]
    if kind == "str":
        return text
    try:
        if kind == "int":
            return int(text)
        return float(text)
    except ValueError:
        raise ConfigError("key %r: expected %s, got %r" % (key, kind, text)) from None


def _parse_path_text(text: str) -> Optional[Polyline]:
    if not text:
        return None
    points = []
    for part in text.split(";"):
        pieces = part.split(",")
        if len(pieces) != 2:
            raise ConfigError("global_path: expected 'e,n; e,n; ...', got %r" % text)
        try:
            points.append((float(pieces[0]), float(pieces[1])))
        except ValueError:
            raise ConfigError("global_path: bad coordinate in %r" % part) from None
    try:
        return Polyline(points)
    except ValueError as exc:
        raise ConfigError("global_path: %s" % exc) from None


def build_config(raw: dict[str, str]) -> Config:
    """Merge raw strings over defaults, validate, build parameter objects."""
    v: dict[str, object] = {}
    for key, (default, _kind) in DEFAULTS.items():
        v[key] = _convert(key, raw[key]) if key in raw else default

    for key, value in v.items():
        if key in _NON_POSITIVE_OK:
            continue
        if isinstance(value, (int, float)) and value <= 0:
            raise ConfigError("key %r must be positive, got %r" % (key, value))
    if v["grid.cell_size"] < 0:
        raise ConfigError("grid.cell_size must be >= 0 (0 = chart native)")
    if v["colregs.min_target_speed"] < 0:
        raise ConfigError("colregs.min_target_speed must be >= 0")
    if not 1 <= v["radar.intensity_threshold"] <= 255:
        raise ConfigError(
            "radar.intensity_threshold must be in 1..255, got %r"
            % v["radar.intensity_threshold"]
        )

    pipeline = PipelineParams(
        intensity_threshold=v["radar.intensity_threshold"],
        max_dead_zone=v["radar.max_dead_zone"],
        min_target_cells=v["radar.min_target_cells"],
        tracker=TrackerParams(
            kf=KfParams(
                sigma_ax=v["tracker.sigma_ax"],
                sigma_ay=v["tracker.sigma_ay"],
                sigma_px=v["tracker.sigma_px"],
                sigma_py=v["tracker.sigma_py"],
                init_pos_var=v["tracker.init_pos_var"],
                init_vel_var=v["tracker.init_vel_var"],
            ),
            range_max=v["tracker.range_max"],
            pdf_threshold=v["tracker.pdf_threshold"],
            max_misses=v["tracker.max_misses"],
            min_updates_for_reporting=v["tracker.min_updates"],
        ),
        colregs=ColregsParams(
            overtaking_bound=v["colregs.overtaking_bound"],
            crossing_bound=v["colregs.crossing_bound"],
            safety_margin=v["colregs.safety_margin"],
            lookahead=v["colregs.lookahead"],
            pad_min=v["colregs.pad_min"],
            activation_range=v["colregs.activation_range"],
            min_target_speed=v["colregs.min_target_speed"],
            strict_pad=v["colregs.strict_pad"],
        ),
        planner=PlannerParams(
            clearance=v["planner.clearance"],
            search_radius=v["planner.search_radius"],
            max_detours=v["planner.max_detours"],
        ),
    )
    return Config(
        pipeline=pipeline,
        max_range=v["radar.max_range"],
        cell_size=v["grid.cell_size"],
        global_path=_parse_path_text(v["global_path"]),
    )


def load_config(path: Optional[str]) -> Config:
    return build_config(parse_config(path))


def regrid(chart: Chart, cell_size: float) -> Chart:
    """Re-grid a chart to the configured resolution (0 = keep native).

    Land polygons and physical extent are unchanged; only the raster
    density the pipeline paints radar returns into moves.
    """
    if cell_size <= 0 or cell_size == chart.cell_size:
        return chart
    width = max(1, round(chart.width * chart.cell_size / cell_size))
    height = max(1, round(chart.height * chart.cell_size / cell_size))
    return dataclasses.replace(
        chart, cell_size=cell_size, width=width, height=height
    )


def default_config_text() -> str:
    """All keys at their defaults, one per line, for --help and docs."""
    lines = []
    for key, (default, kind) in DEFAULTS.items():
        if kind == "str":
            lines.append("%s = %s" % (key, default))
        elif kind == "int":
            lines.append("%s = %d" % (key, default))
        else:
            lines.append("%s = %r" % (key, default))
    return "\n".join(lines) + "\n"
