"""End-to-end command-line behavior: files in, files + exit codes out."""

import math

import pytest

from rivernav.chart import Chart
from rivernav.cli import main
from rivernav.fileio import save_chart
from rivernav.geometry import UtmPoint

ZEROS = ",".join(["0"] * 512)


def _open_chart_file(tmp_path, name="chart.txt", width=60, height=60):
    path = tmp_path / name
    save_chart(str(path), Chart((), UtmPoint(0.0, 0.0), 1.0, width, height))
    return str(path)


def _quiet_log_lines(n_frames, own=(30.0, 30.0)):
    """A stationary vessel staring at empty water: all intensities zero."""
    lines = ["ODOM,0.0,%r,%r,0.0,0.0" % own]
    for k in range(n_frames):
        for j in range(512):
            t = k * 2.5 + j * (2.5 / 512)
            bearing = j * (2.0 * math.pi / 512)
            lines.append("SCAN,%r,%r,%s" % (t, bearing, ZEROS))
    return lines


def _write_log(tmp_path, lines, name="mission.log"):
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def _write_cfg(tmp_path, text, name="nav.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# ---------------------------------------------------------------------------
# replay


def test_replay_quiet_log_tracks_global_path(tmp_path, capsys):
    chart = _open_chart_file(tmp_path)
    log = _write_log(tmp_path, _quiet_log_lines(2))
    cfg = _write_cfg(tmp_path, "global_path = 30,30; 30,100\n")
    out = tmp_path / "out"
    code = main(["replay", "--chart", chart, "--log", log, "--config", cfg, "--out", str(out)])
    assert code == 0

    wp0 = (out / "waypoints_00000.txt").read_text().splitlines()
    assert (out / "waypoints_00001.txt").exists()
    assert not (out / "waypoints_00002.txt").exists()
    assert len(wp0) >= 2
    assert wp0[0] == "30.0 30.0"  # plans start at the vessel
    for row in wp0:
        assert row.split()[0] == "30.0"  # clipped global path: due north

    assert (out / "tracks.txt").read_text() == ""
    metrics = (out / "metrics.txt").read_text().splitlines()
    assert len(metrics) == 2
    for row in metrics:
        fields = row.split()
        assert fields[3] == "0" and fields[4] == "ok"


def test_replay_is_deterministic(tmp_path):
    chart = _open_chart_file(tmp_path)
    log = _write_log(tmp_path, _quiet_log_lines(2))
    cfg = _write_cfg(tmp_path, "global_path = 30,30; 30,100\n")
    outs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        assert (
            main(
                ["replay", "--chart", chart, "--log", log, "--config", cfg,
                 "--out", str(out), "--svg"]
            )
            == 0
        )
        outs.append(out)
    a, b = outs
    for name in ("waypoints_00000.txt", "waypoints_00001.txt", "tracks.txt",
                 "frame_00000.svg", "frame_00001.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_replay_skips_partial_tail(tmp_path):
    chart = _open_chart_file(tmp_path)
    lines = _quiet_log_lines(1)
    for j in range(50):  # half-finished second rotation
        t = 2.5 + j * (2.5 / 512)
        lines.append("SCAN,%r,%r,%s" % (t, j * (2.0 * math.pi / 512), ZEROS))
    log = _write_log(tmp_path, lines)
    out = tmp_path / "out"
    code = main(["replay", "--chart", chart, "--log", log, "--out", str(out)])
    # No config: the route falls back to first->last odometry, but a
    # stationary vessel cannot define one.
    assert code == 1


def test_replay_stationary_needs_global_path(tmp_path, capsys):
    chart = _open_chart_file(tmp_path)
    log = _write_log(tmp_path, _quiet_log_lines(1))
    code = main(["replay", "--chart", chart, "--log", log, "--out", str(tmp_path / "o")])
    assert code == 1
    assert "global_path" in capsys.readouterr().err


def test_replay_partial_tail_with_route(tmp_path):
    chart = _open_chart_file(tmp_path)
    lines = _quiet_log_lines(1)
    for j in range(50):
        t = 2.5 + j * (2.5 / 512)
        lines.append("SCAN,%r,%r,%s" % (t, j * (2.0 * math.pi / 512), ZEROS))
    log = _write_log(tmp_path, lines)
    cfg = _write_cfg(tmp_path, "global_path = 30,30; 30,100\n")
    out = tmp_path / "out"
    code = main(["replay", "--chart", chart, "--log", log, "--config", cfg, "--out", str(out)])
    assert code == 0
    assert (out / "waypoints_00000.txt").exists()
    assert not (out / "waypoints_00001.txt").exists()


def test_replay_bad_intensity_names_line(tmp_path, capsys):
    chart = _open_chart_file(tmp_path)
    bad = "SCAN,5.0,0.0," + ",".join(["0"] * 511) + ",300"
    log = _write_log(tmp_path, _quiet_log_lines(1) + [bad])
    code = main(["replay", "--chart", chart, "--log", log, "--out", str(tmp_path / "o")])
    assert code == 1
    err = capsys.readouterr().err
    bad_line_no = 1 + 512 + 1  # one ODOM, one full rotation, then the bad record
    assert (":%d:" % bad_line_no) in err
    assert "300" in err


def test_replay_no_odometry(tmp_path, capsys):
    chart = _open_chart_file(tmp_path)
    log = _write_log(tmp_path, _quiet_log_lines(1)[1:])
    code = main(["replay", "--chart", chart, "--log", log, "--out", str(tmp_path / "o")])
    assert code == 1
    assert "odometry" in capsys.readouterr().err


def test_replay_no_complete_rotation(tmp_path, capsys):
    chart = _open_chart_file(tmp_path)
    log = _write_log(tmp_path, _quiet_log_lines(1)[:40])
    cfg = _write_cfg(tmp_path, "global_path = 30,30; 30,100\n")
    code = main(
        ["replay", "--chart", chart, "--log", log, "--config", cfg, "--out", str(tmp_path / "o")]
    )
    assert code == 1
    assert "complete rotation" in capsys.readouterr().err


def test_replay_missing_files(tmp_path, capsys):
    chart = _open_chart_file(tmp_path)
    log = _write_log(tmp_path, _quiet_log_lines(1))
    assert main(["replay", "--chart", str(tmp_path / "no.txt"), "--log", log,
                 "--out", str(tmp_path / "o")]) == 1
    assert main(["replay", "--chart", chart, "--log", str(tmp_path / "no.log"),
                 "--out", str(tmp_path / "o")]) == 1


def test_replay_rejects_unknown_config_key(tmp_path, capsys):
    chart = _open_chart_file(tmp_path)
    log = _write_log(tmp_path, _quiet_log_lines(1))
    cfg = _write_cfg(tmp_path, "radar.maxrange = 100\n")
    code = main(["replay", "--chart", chart, "--log", log, "--config", cfg,
                 "--out", str(tmp_path / "o")])
    assert code == 1
    assert "radar.maxrange" in capsys.readouterr().err


def test_bad_flags_exit_1(capsys):
    assert main(["replay"]) == 1
    assert main([]) == 1
    assert main(["simulate", "--out", "x"]) == 1


# ---------------------------------------------------------------------------
# simulate


def _scenario_file(tmp_path, duration=10.0, path_text="40,20; 40,70", targets=()):
    chart = _open_chart_file(tmp_path, name="mini.txt", width=80, height=80)
    lines = [
        "name = calm-water",
        "kind = generic",
        "seed = 7",
        "duration = %r" % duration,
        "chart = mini.txt",
        "ownship = 40 20 0 3",
        "path = %s" % path_text,
    ]
    lines += list(targets)
    p = tmp_path / "calm.scn"
    p.write_text("\n".join(lines) + "\n")
    return str(p), chart


def test_simulate_scenario_file_pass(tmp_path, capsys):
    scn, _ = _scenario_file(tmp_path)
    out = tmp_path / "out"
    code = main(["simulate", "--scenario", scn, "--out", str(out)])
    assert code == 0
    text = (out / "compliance.txt").read_text()
    assert "verdict = pass" in text
    assert "kind = generic" in text
    assert "cpa_distance = inf" in text
    stdout = capsys.readouterr().out
    assert "verdict = pass" in stdout
    traj = (out / "trajectory.txt").read_text().splitlines()
    assert traj and all(row.startswith("OWN,") for row in traj)


def test_simulate_svg_frames(tmp_path):
    scn, _ = _scenario_file(tmp_path)
    out = tmp_path / "out"
    assert main(["simulate", "--scenario", scn, "--out", str(out), "--svg"]) == 0
    frames = sorted(out.glob("frame_*.svg"))
    assert len(frames) == 4  # 10 s of 2.5 s rotations
    assert frames[0].read_text().startswith("<svg ")


def test_simulate_same_seed_identical_reports(tmp_path):
    scn, _ = _scenario_file(
        tmp_path, targets=["TARGET 40 60 180 0.8 6 3"]
    )
    outs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        main(["simulate", "--scenario", scn, "--seed", "11", "--out", str(out)])
        outs.append(out)
    a, b = outs
    assert (a / "compliance.txt").read_bytes() == (b / "compliance.txt").read_bytes()
    assert (a / "trajectory.txt").read_bytes() == (b / "trajectory.txt").read_bytes()


def test_simulate_unknown_name_lists_presets(tmp_path, capsys):
    code = main(["simulate", "--scenario", "zigzag", "--out", str(tmp_path / "o")])
    assert code == 1
    err = capsys.readouterr().err
    for name in ("head_on", "overtaking", "crossing_left", "crossing_right"):
        assert name in err


def test_simulate_divergence_exits_2(tmp_path, capsys):
    scn, _ = _scenario_file(tmp_path, duration=60.0, path_text="40,20; 40,400")
    code = main(["simulate", "--scenario", scn, "--out", str(tmp_path / "o")])
    assert code == 2
    assert "diverged" in capsys.readouterr().err


def test_simulate_bad_scenario_file_exits_1(tmp_path, capsys):
    p = tmp_path / "broken.scn"
    p.write_text("TARGET 1 2 3\n")
    code = main(["simulate", "--scenario", str(p), "--out", str(tmp_path / "o")])
    assert code == 1
    assert "line 1" in capsys.readouterr().err
