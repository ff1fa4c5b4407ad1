"""Configuration parsing: defaults, overrides, and rejection of typos."""

import dataclasses
import math

import pytest

from rivernav.chart import Chart
from rivernav.config import (
    DEFAULTS,
    ConfigError,
    build_config,
    default_config_text,
    load_config,
    parse_config,
    regrid,
)
from rivernav.geometry import UtmPoint
from rivernav.pipeline import PipelineParams


def _write(tmp_path, text):
    p = tmp_path / "nav.cfg"
    p.write_text(text)
    return str(p)


def test_no_file_gives_defaults():
    cfg = load_config(None)
    assert cfg.pipeline == PipelineParams()
    assert cfg.max_range == 250.0
    assert cfg.cell_size == 0.0
    assert cfg.global_path is None


def test_empty_file_matches_no_file(tmp_path):
    assert load_config(_write(tmp_path, "\n# nothing here\n")) == load_config(None)


def test_documented_defaults_parse_back(tmp_path):
    # The rendered default listing must itself be a valid config that
    # reproduces the defaults exactly.
    path = _write(tmp_path, default_config_text())
    assert load_config(path) == load_config(None)


def test_every_key_documented():
    text = default_config_text()
    for key in DEFAULTS:
        assert ("%s = " % key) in text


def test_overrides(tmp_path):
    path = _write(
        tmp_path,
        "\n".join(
            [
                "tracker.max_misses = 5",
                "planner.clearance = 2.5",
                "radar.intensity_threshold = 80  # darker water",
                "colregs.safety_margin = 15.0",
                "global_path = 0,0; 100,0; 100,50",
            ]
        ),
    )
    cfg = load_config(path)
    assert cfg.pipeline.tracker.max_misses == 5
    assert cfg.pipeline.planner.clearance == 2.5
    assert cfg.pipeline.intensity_threshold == 80
    assert cfg.pipeline.colregs.safety_margin == 15.0
    assert cfg.pipeline.tracker.kf.sigma_ax == 0.5  # untouched default
    assert [tuple(p) for p in cfg.global_path.points] == [
        (0.0, 0.0),
        (100.0, 0.0),
        (100.0, 50.0),
    ]


def test_unknown_key_rejected(tmp_path):
    path = _write(tmp_path, "tracker.sigma = 1.0\n")
    with pytest.raises(ConfigError) as err:
        load_config(path)
    assert "tracker.sigma" in str(err.value)
    assert ":1:" in str(err.value)


def test_duplicate_key_rejected(tmp_path):
    path = _write(tmp_path, "planner.clearance = 1\nplanner.clearance = 2\n")
    with pytest.raises(ConfigError) as err:
        load_config(path)
    assert ":2:" in str(err.value)


def test_line_without_equals_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "radar.max_range 250\n"))


@pytest.mark.parametrize(
    "line",
    [
        "tracker.max_misses = 2.5",  # int key, fractional value
        "planner.clearance = soon",
        "radar.max_range = 0",
        "radar.max_range = -3",
        "tracker.pdf_threshold = 0",
        "radar.intensity_threshold = 300",
        "radar.intensity_threshold = 0",
        "grid.cell_size = -1",
        "colregs.min_target_speed = -0.1",
        "global_path = 0,0; 1",
        "global_path = 0,0; 0,0",
        "global_path = 5,5",
    ],
)
def test_bad_values_rejected(tmp_path, line):
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, line + "\n"))


def test_build_config_accepts_raw_strings():
    cfg = build_config({"planner.max_detours": "8"})
    assert cfg.pipeline.planner.max_detours == 8


def test_parse_config_none_is_empty():
    assert parse_config(None) == {}


def test_defaults_match_dataclass_defaults():
    assert DEFAULTS["colregs.overtaking_bound"][0] == math.pi / 4
    assert DEFAULTS["planner.clearance"][0] == math.sqrt(2.0)
    cfg = load_config(None)
    assert cfg.pipeline.tracker == dataclasses.replace(cfg.pipeline.tracker)


def _chart(cell, width, height):
    return Chart((), UtmPoint(10.0, 20.0), cell, width, height)


def test_regrid_preserves_extent():
    chart = _chart(1.0, 500, 800)
    fine = regrid(chart, 0.5)
    assert (fine.width, fine.height) == (1000, 1600)
    assert fine.extent == chart.extent
    assert fine.land_polygons == chart.land_polygons
    coarse = regrid(chart, 2.0)
    assert (coarse.width, coarse.height) == (250, 400)
    assert coarse.extent == chart.extent


def test_regrid_zero_keeps_native():
    chart = _chart(2.0, 100, 100)
    assert regrid(chart, 0.0) is chart
    assert regrid(chart, 2.0) is chart
