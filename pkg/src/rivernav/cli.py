"""Command-line front end: replay recorded logs, run scripted scenarios.

Exit codes: 0 success (or pass verdict), 1 validation error (bad files,
bad flags, bad config), 2 runtime divergence or a fail verdict.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from typing import Optional

from .chart import ChartParseError, ChartValidationError, load_chart
from .config import Config, ConfigError, load_config, regrid
from .fileio import ParseError, read_log
from .geometry import Polyline, distance
from .pipeline import FrameResult, Pipeline
from .planner import GlobalPath
from .radar import IncompleteRotation, OwnshipTrack, split_rotations
from .render import render_frame
from .simulator import (
    PRESETS,
    ScenarioDiverged,
    ScenarioError,
    load_scenario,
    preset,
    run,
)


class CliError(Exception):
    """Carries the exit code alongside the diagnostic."""

    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; our contract reserves 2 for runtime
    # failures and uses 1 for every validation problem.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(1, message)


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _load_config_checked(path: Optional[str]) -> Config:
    try:
        return load_config(path)
    except FileNotFoundError:
        raise CliError(1, "config file not found: %s" % path)
    except ConfigError as exc:
        raise CliError(1, str(exc))


def _format_waypoints(result: FrameResult) -> str:
    if result.plan.waypoints is None:
        return ""
    return (
        "\n".join(
            "%r %r" % (p.easting, p.northing) for p in result.plan.waypoints.points
        )
        + "\n"
    )


def _replay(args) -> int:
    cfg = _load_config_checked(args.config)
    try:
        chart = regrid(load_chart(args.chart), cfg.cell_size)
    except FileNotFoundError:
        raise CliError(1, "chart file not found: %s" % args.chart)
    except (ChartParseError, ChartValidationError) as exc:
        raise CliError(1, "%s: %s" % (args.chart, exc))

    try:
        scans, fixes = read_log(args.log, cfg.max_range)
    except FileNotFoundError:
        raise CliError(1, "log file not found: %s" % args.log)
    except ParseError as exc:
        raise CliError(1, str(exc))
    if not fixes:
        raise CliError(1, "%s: log contains no odometry records" % args.log)
    if not scans:
        raise CliError(1, "%s: log contains no scan records" % args.log)

    if cfg.global_path is not None:
        route = cfg.global_path
    else:
        # No configured route: replay toward wherever the vessel ended up.
        first, last = fixes[0].position, fixes[-1].position
        if distance(first, last) <= 1e-9:
            raise CliError(
                1,
                "odometry does not move; set global_path in the config file",
            )
        route = Polyline([first, last])

    os.makedirs(args.out, exist_ok=True)
    pipe = Pipeline(chart, GlobalPath(route), cfg.pipeline)
    track = OwnshipTrack(fixes)
    rotations = split_rotations(scans)

    tracks_lines: list[str] = []
    metrics_lines: list[str] = []
    n_frames = 0
    for idx, rotation in enumerate(rotations):
        try:
            result = pipe.process(rotation, track)
        except IncompleteRotation as exc:
            if idx == len(rotations) - 1:
                break  # partial trailing rotation: the log simply ended
            raise CliError(1, "%s: rotation %d: %s" % (args.log, idx, exc))
        _write(
            os.path.join(args.out, "waypoints_%05d.txt" % idx),
            _format_waypoints(result),
        )
        for t in sorted(result.tracks, key=lambda t: t.id):
            x = t.state.x
            p = t.state.P
            tracks_lines.append(
                "%d %r %d %r %r %r %r %r %r %r %r"
                % (
                    idx,
                    result.frame.end_time,
                    t.id,
                    float(x[0]),
                    float(x[1]),
                    float(x[2]),
                    float(x[3]),
                    float(p[0, 0]),
                    float(p[1, 1]),
                    float(p[2, 2]),
                    float(p[3, 3]),
                )
            )
        metrics_lines.append(
            "%d %r %r %d %s"
            % (
                idx,
                result.frame.end_time,
                result.elapsed,
                len(result.tracks),
                result.plan.status.value,
            )
        )
        if args.svg:
            _write(
                os.path.join(args.out, "frame_%05d.svg" % idx),
                render_frame(chart, result),
            )
        n_frames += 1
    if n_frames == 0:
        raise CliError(1, "%s: log contains no complete rotation" % args.log)

    _write(os.path.join(args.out, "tracks.txt"), "".join(l + "\n" for l in tracks_lines))
    _write(
        os.path.join(args.out, "metrics.txt"), "".join(l + "\n" for l in metrics_lines)
    )
    print("replayed %d frames -> %s" % (n_frames, args.out))
    return 0


def _resolve_scenario(name_or_path: str):
    if os.path.exists(name_or_path):
        try:
            return load_scenario(name_or_path, load_chart)
        except (ScenarioError, ChartParseError, ChartValidationError) as exc:
            raise CliError(1, "%s: %s" % (name_or_path, exc))
    try:
        return preset(name_or_path)
    except KeyError:
        raise CliError(
            1,
            "unknown scenario %r; presets: %s"
            % (name_or_path, ", ".join(sorted(PRESETS))),
        )


def _format_compliance(report) -> str:
    return (
        "kind = %s\n"
        "cpa_distance = %r\n"
        "cpa_time = %r\n"
        "pass_side = %s\n"
        "stand_on_deviation = %r\n"
        "verdict = %s\n"
        "detail = %s\n"
        % (
            report.kind,
            report.cpa_distance,
            report.cpa_time,
            report.pass_side,
            report.stand_on_deviation,
            "pass" if report.verdict else "fail",
            report.detail,
        )
    )


def _format_trajectories(log) -> str:
    lines = []
    for s in log.own:
        lines.append(
            "OWN,%r,%r,%r,%r,%r"
            % (s.timestamp, s.position.easting, s.position.northing, s.heading, s.speed)
        )
    for i, samples in enumerate(log.targets):
        for t, p in samples:
            lines.append("TGT,%d,%r,%r,%r" % (i, t, p.easting, p.northing))
    return "".join(l + "\n" for l in lines)


def _simulate(args) -> int:
    cfg = _load_config_checked(args.config)
    scenario = _resolve_scenario(args.scenario)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    if cfg.cell_size > 0:
        scenario = dataclasses.replace(
            scenario, chart=regrid(scenario.chart, cfg.cell_size)
        )

    os.makedirs(args.out, exist_ok=True)
    results: list[FrameResult] = []
    hook = results.append if args.svg else None
    # Without an explicit config the simulator picks its own planner
    # margins (sized to target motion); a config file takes full control.
    params = cfg.pipeline if args.config is not None else None
    try:
        report, log = run(
            scenario, params=params, max_range=cfg.max_range, frame_hook=hook
        )
    except ScenarioDiverged as exc:
        raise CliError(2, "scenario diverged: %s" % exc)

    _write(os.path.join(args.out, "compliance.txt"), _format_compliance(report))
    _write(os.path.join(args.out, "trajectory.txt"), _format_trajectories(log))
    if args.svg:
        for idx, result in enumerate(results):
            _write(
                os.path.join(args.out, "frame_%05d.svg" % idx),
                render_frame(scenario.chart, result),
            )
    sys.stdout.write(_format_compliance(report))
    return 0 if report.verdict else 2


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rivernav", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    rp = sub.add_parser("replay", help="run the pipeline over a recorded log")
    rp.add_argument("--chart", required=True, help="chart file")
    rp.add_argument("--log", required=True, help="scan/odometry log (.gz ok)")
    rp.add_argument("--config", default=None, help="key = value config file")
    rp.add_argument("--out", required=True, help="output directory")
    rp.add_argument("--svg", action="store_true", help="also render SVG frames")
    rp.set_defaults(func=_replay)

    sp = sub.add_parser("simulate", help="run a scripted encounter scenario")
    sp.add_argument("--scenario", required=True, help="preset name or scenario file")
    sp.add_argument("--config", default=None, help="key = value config file")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--svg", action="store_true", help="also render SVG frames")
    sp.add_argument("--seed", type=int, default=None, help="override scenario seed")
    sp.set_defaults(func=_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
