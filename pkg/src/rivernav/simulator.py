"""Closed-loop encounter scenarios with synthetic radar.

Scripted target vessels move through a chart while a waypoint-following
ownship runs the full sensing/tracking/avoidance chain against radar
frames synthesized by ray casting.  Four built-in presets reproduce the
canonical two-vessel encounters (head-on, overtaking, and the two
crossings) on a straight-river chart, and a compliance scorer distills
each run into a closest-point-of-approach verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .chart import Chart
from .colregs import ColregsParams, ProjectionPolygon
from .geometry import (
    Polygon,
    Polyline,
    UtmPoint,
    angle_diff,
    distance,
    heading_to_unit,
    normalize_angle,
    point_in_polygon,
    vector_heading,
)
from .pipeline import FrameResult, Pipeline, PipelineParams
from .planner import GlobalPath, PlannerParams, PlanStatus
from .radar import (
    ROTATION_PERIOD,
    SAMPLES_PER_LINE,
    OwnshipState,
    OwnshipTrack,
    ScanLine,
)

LINES_PER_ROTATION = 512
DEAD_ZONE_EXTENT = 12.0  # m of synthetic transmission hump
P_NOISE = 0.001  # speckle probability per sample
TURN_RATE = math.radians(20.0)  # ownship heading slew limit, rad/s
WAYPOINT_RADIUS = 3.0  # m; a waypoint this close counts as reached
DECEL = 0.5  # m/s^2 braking on a stop order
SUBSTEP_DT = 0.1  # s; helm/ground-truth integration step between frames


class ScenarioDiverged(RuntimeError):
    """Ownship left the charted area during a run."""


class ScenarioError(ValueError):
    """A scenario file failed to parse or validate."""

    def __init__(self, line_no: int, reason: str):
        super().__init__("line %d: %s" % (line_no, reason))
        self.line_no = line_no


@dataclass(frozen=True)
class TargetScript:
    """Ground-truth motion of one scripted vessel."""

    position: UtmPoint
    heading: float  # radians clockwise from north
    speed: float  # m/s
    hull_length: float = 8.0
    hull_width: float = 3.0
    waypoints: Optional[tuple[UtmPoint, ...]] = None
    wp_index: int = 0

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError("target speed must be >= 0")
        if self.hull_length <= 0 or self.hull_width <= 0:
            raise ValueError("hull dimensions must be positive")

    def hull(self) -> Polygon:
        """Axis-of-travel rectangle at the current pose."""
        fe, fn = heading_to_unit(self.heading)
        se, sn = fn, -fe  # starboard unit vector
        hl, hw = self.hull_length / 2.0, self.hull_width / 2.0
        e, n = self.position
        return Polygon(
            [
                (e - hl * fe - hw * se, n - hl * fn - hw * sn),
                (e + hl * fe - hw * se, n + hl * fn - hw * sn),
                (e + hl * fe + hw * se, n + hl * fn + hw * sn),
                (e - hl * fe + hw * se, n - hl * fn + hw * sn),
            ],
            ensure_ccw=True,
        )


@dataclass(frozen=True)
class Scenario:
    chart: Chart
    ownship_start: OwnshipState
    global_path: GlobalPath
    targets: tuple[TargetScript, ...]
    duration: float  # seconds
    seed: int
    kind: str = "generic"
    name: str = ""

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        for i, tg in enumerate(self.targets):
            if not self.chart.contains(tg.position):
                raise ValueError("target %d starts outside the chart extent" % i)


@dataclass(frozen=True)
class ComplianceReport:
    kind: str
    cpa_distance: float  # m
    cpa_time: float  # s
    pass_side: str  # "port" | "starboard"
    stand_on_deviation: float  # m, max cross-track during the encounter
    verdict: bool
    detail: str = ""


@dataclass
class FrameRecord:
    end_time: float
    status: str
    n_tracks: int
    projections: list[ProjectionPolygon]
    waypoints: Optional[Polyline]
    elapsed: float


@dataclass
class SimulationLog:
    """Ground-truth trajectories plus per-frame pipeline outcomes."""

    own: list[OwnshipState]
    targets: list[list[tuple[float, UtmPoint]]]  # per target: (t, position)
    frames: list[FrameRecord]
    global_path: GlobalPath
    scan_lines: Optional[list[ScanLine]] = None  # raw lines when collected


# ---------------------------------------------------------------------------
# ground-truth kinematics


def step_targets(targets: Sequence[TargetScript], dt: float) -> list[TargetScript]:
    """Advance scripted vessels by dt (exact for constant velocity)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    out: list[TargetScript] = []
    for tg in targets:
        if tg.waypoints is None:
            fe, fn = heading_to_unit(tg.heading)
            pos = UtmPoint(
                tg.position.easting + tg.speed * dt * fe,
                tg.position.northing + tg.speed * dt * fn,
            )
            out.append(replace(tg, position=pos))
            continue
        pos, hd, i = tg.position, tg.heading, tg.wp_index
        left = tg.speed * dt
        while left > 0 and i < len(tg.waypoints):
            wp = tg.waypoints[i]
            d = distance(pos, wp)
            if d <= 1e-9:
                i += 1
                continue
            hd = vector_heading(wp.easting - pos.easting, wp.northing - pos.northing)
            step = min(left, d)
            fe, fn = heading_to_unit(hd)
            pos = UtmPoint(pos.easting + step * fe, pos.northing + step * fn)
            left -= step
            if step >= d - 1e-12:
                i += 1
        out.append(replace(tg, position=pos, heading=hd, wp_index=i))
    return out


# ---------------------------------------------------------------------------
# synthetic radar


def _stacked_edges(polys: Sequence[Polygon]) -> tuple[np.ndarray, np.ndarray]:
    if not polys:
        return np.zeros((0, 2)), np.zeros((0, 2))
    return (
        np.concatenate([p.xy for p in polys]),
        np.concatenate([p.xy_next for p in polys]),
    )


def _first_hit(ox, oy, de, dn, a: np.ndarray, b: np.ndarray) -> float:
    """Distance to the nearest edge hit by the ray, or inf."""
    if not len(a):
        return math.inf
    vx, vy = b[:, 0] - a[:, 0], b[:, 1] - a[:, 1]
    rx, ry = a[:, 0] - ox, a[:, 1] - oy
    c = de * vy - dn * vx
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (rx * vy - ry * vx) / c
        u = (rx * dn - ry * de) / c
    ok = (np.abs(c) > 1e-12) & (t > 1e-9) & (u >= 0.0) & (u <= 1.0)
    if not ok.any():
        return math.inf
    return float(t[ok].min())


def _synth_line(
    rng: np.random.Generator,
    position: UtmPoint,
    heading: float,
    bearing: float,
    timestamp: float,
    edges_a: np.ndarray,
    edges_b: np.ndarray,
    max_range: float,
    p_noise: float,
) -> ScanLine:
    samples = np.zeros(SAMPLES_PER_LINE, dtype=np.int64)
    dr = max_range / SAMPLES_PER_LINE

    # Transmission hump: a descending near-field ramp with jitter.
    n_dz = min(int(math.floor(DEAD_ZONE_EXTENT / dr + 0.5)), SAMPLES_PER_LINE)
    if n_dz > 1:
        base = np.linspace(230.0, 45.0, n_dz)
        samples[:n_dz] = np.clip(
            base.astype(np.int64) + rng.integers(-10, 11, size=n_dz), 1, 255
        )

    # Sub-threshold speckle beyond the hump.
    tail = SAMPLES_PER_LINE - n_dz
    if tail > 0 and p_noise > 0:
        mask = rng.random(tail) < p_noise
        hits = int(mask.sum())
        if hits:
            samples[n_dz:][mask] = rng.integers(1, 61, size=hits)

    theta = heading + bearing
    d = _first_hit(
        position.easting, position.northing, math.sin(theta), math.cos(theta), edges_a, edges_b
    )
    if d < max_range:
        k = min(int(d / dr), SAMPLES_PER_LINE - 1)
        samples[k] = max(int(samples[k]), int(rng.integers(180, 256)))

    return ScanLine(
        timestamp=timestamp,
        bearing=normalize_angle(bearing),
        samples=samples.astype(np.uint8),
        max_range=max_range,
    )


def synth_frame(
    ownship: OwnshipState,
    targets: Sequence[TargetScript],
    chart: Chart,
    noise_seed,
    max_range: float = 250.0,
    p_noise: float = P_NOISE,
) -> list[ScanLine]:
    """One full rotation of scanlines from frozen vessel poses.

    Pure in (states, seed): the same inputs give bit-identical lines.
    Timestamps advance across the rotation at the nominal line rate;
    noise_seed is anything numpy's default_rng accepts.
    """
    rng = np.random.default_rng(noise_seed)
    a_t, b_t = _stacked_edges([tg.hull() for tg in targets])
    a_l, b_l = _stacked_edges(chart.land_polygons)
    edges_a = np.concatenate([a_t, a_l])
    edges_b = np.concatenate([b_t, b_l])
    dt_line = ROTATION_PERIOD / LINES_PER_ROTATION
    lines = []
    for k in range(LINES_PER_ROTATION):
        lines.append(
            _synth_line(
                rng,
                ownship.position,
                ownship.heading,
                k * 2.0 * math.pi / LINES_PER_ROTATION,
                ownship.timestamp + k * dt_line,
                edges_a,
                edges_b,
                max_range,
                p_noise,
            )
        )
    return lines


# ---------------------------------------------------------------------------
# closed loop


def _advance_ownship(
    pos: UtmPoint,
    heading: float,
    speed: float,
    wps: list[UtmPoint],
    braking: bool,
    commanded: float,
    dt: float,
) -> tuple[UtmPoint, float, float]:
    """One kinematic step of the waypoint follower.

    Heading slews toward the active waypoint at the turn-rate cap; a stop
    order (or an exhausted waypoint list) bleeds speed off at DECEL.
    """
    while wps and distance(pos, wps[0]) <= WAYPOINT_RADIUS:
        wps.pop(0)
    if braking or not wps:
        speed = max(0.0, speed - DECEL * dt)
    else:
        wp = wps[0]
        desired = vector_heading(wp.easting - pos.easting, wp.northing - pos.northing)
        turn = angle_diff(desired, heading)
        cap = TURN_RATE * dt
        turn = max(-cap, min(cap, turn))
        heading = normalize_angle(heading + turn)
        speed = commanded
    fe, fn = heading_to_unit(heading)
    return UtmPoint(pos.easting + speed * dt * fe, pos.northing + speed * dt * fn), heading, speed


def run(
    scenario: Scenario,
    params: Optional[PipelineParams] = None,
    max_range: float = 250.0,
    p_noise: float = P_NOISE,
    commanded_speed: Optional[float] = None,
    collect_raw: bool = False,
    frame_hook: Optional[Callable[[FrameResult], None]] = None,
) -> tuple[ComplianceReport, SimulationLog]:
    """Run the loop: synthesize, process, steer; then score compliance.

    The radar is a snapshot model: each rotation is rendered from the
    vessel poses frozen at the frame boundary (one odometry fix per
    frame, matching the rays), then the pipeline replans and the helm
    follows the fresh waypoints through SUBSTEP_DT kinematic sub-steps
    until the next boundary (a Stop status brakes to rest at DECEL).

    Raises ScenarioDiverged when ownship exits the chart extent.
    """
    if params is None:
        # Waypoints must stay clear of a projection that keeps moving for
        # one sensing lag plus one replan interval after the plan lands,
        # so pad the static clearance with two rotations of target motion.
        vmax = max((tg.speed for tg in scenario.targets), default=0.0)
        params = PipelineParams(
            planner=PlannerParams(clearance=math.sqrt(2.0) + 2.0 * ROTATION_PERIOD * vmax)
        )
    pipe = Pipeline(scenario.chart, scenario.global_path, params)

    start = scenario.ownship_start
    pos, heading, speed = start.position, start.heading, start.speed
    commanded = commanded_speed if commanded_speed is not None else start.speed
    targets = list(scenario.targets)

    own_log: list[OwnshipState] = []
    target_log: list[list[tuple[float, UtmPoint]]] = [[] for _ in targets]
    radar_fixes: list[OwnshipState] = []
    frames: list[FrameRecord] = []
    raw: Optional[list[ScanLine]] = [] if collect_raw else None

    n_frames = max(1, int(round(scenario.duration / ROTATION_PERIOD)))
    n_sub = int(round(ROTATION_PERIOD / SUBSTEP_DT))
    # Until the first plan lands, the helm follows the global route.
    route: list[UtmPoint] = list(scenario.global_path.waypoints.points)
    braking = False

    for k in range(n_frames):
        t0 = start.timestamp + k * ROTATION_PERIOD
        if not scenario.chart.contains(pos):
            raise ScenarioDiverged("ownship at %r left the chart" % (pos,))
        snapshot = OwnshipState(pos, heading, speed, t0)
        radar_fixes.append(snapshot)
        lines = synth_frame(
            snapshot, targets, scenario.chart, (scenario.seed, k), max_range, p_noise
        )
        if raw is not None:
            raw.extend(lines)

        result = pipe.process(lines, OwnshipTrack(radar_fixes))
        if result.plan.status is PlanStatus.STOP or result.plan.waypoints is None:
            braking = True
            route = []
        else:
            braking = False
            route = list(result.plan.waypoints.points[1:])
        frames.append(
            FrameRecord(
                end_time=result.frame.end_time,
                status=result.plan.status.value,
                n_tracks=len(result.tracks),
                projections=list(result.projections),
                waypoints=result.plan.waypoints,
                elapsed=result.elapsed,
            )
        )
        if frame_hook is not None:
            frame_hook(result)

        for j in range(n_sub):
            t = t0 + j * SUBSTEP_DT
            own_log.append(OwnshipState(pos, heading, speed, t))
            for i, tg in enumerate(targets):
                target_log[i].append((t, tg.position))
            pos, heading, speed = _advance_ownship(
                pos, heading, speed, route, braking, commanded, SUBSTEP_DT
            )
            targets = step_targets(targets, SUBSTEP_DT)

    log = SimulationLog(
        own=own_log,
        targets=target_log,
        frames=frames,
        global_path=scenario.global_path,
        scan_lines=raw,
    )
    return compliance(log, scenario.kind, colregs=params.colregs), log


# ---------------------------------------------------------------------------
# scoring


def _cross_track(points: np.ndarray, path: Polyline) -> np.ndarray:
    """Distance from each point to the nearest point of the polyline."""
    pts = np.array([(p.easting, p.northing) for p in path.points])
    a, b = pts[:-1], pts[1:]
    d = b - a
    seg_sq = np.maximum((d * d).sum(axis=1), 1e-18)
    rel = points[:, None, :] - a[None, :, :]  # (M, S, 2)
    tt = np.clip((rel * d[None, :, :]).sum(axis=2) / seg_sq[None, :], 0.0, 1.0)
    feet = a[None, :, :] + tt[:, :, None] * d[None, :, :]
    err = points[:, None, :] - feet
    return np.sqrt((err * err).sum(axis=2)).min(axis=1)


def compliance(
    log: SimulationLog,
    kind: str,
    colregs: Optional[ColregsParams] = None,
    min_cpa: float = 10.0,
    stand_on_max: float = 5.0,
) -> ComplianceReport:
    """Score one run: CPA geometry, pass side, and the rule verdict.

    pass_side is the sign of the cross product of ownship's heading
    vector with the bearing vector to the target at CPA; the stand-on
    deviation is the worst cross-track offset from the original route
    while the target is inside the activation range.
    """
    colregs = colregs or ColregsParams()
    times = np.array([s.timestamp for s in log.own])
    own_xy = np.array([(s.position.easting, s.position.northing) for s in log.own])

    if not log.targets or not log.targets[0]:
        return ComplianceReport(kind, math.inf, 0.0, "port", 0.0, True, "no targets")

    per_target = []
    for samples in log.targets:
        txy = np.array([(p.easting, p.northing) for _, p in samples])
        per_target.append(np.hypot(*(txy - own_xy).T))
    dists = np.stack(per_target)  # (T, M)
    flat = int(np.argmin(dists))
    ti, mi = divmod(flat, dists.shape[1])
    cpa = float(dists[ti, mi])
    cpa_time = float(times[mi])

    he, hn = heading_to_unit(log.own[mi].heading)
    tpos = log.targets[ti][mi][1]
    ve = tpos.easting - own_xy[mi, 0]
    vn = tpos.northing - own_xy[mi, 1]
    side = "port" if he * vn - hn * ve > 0 else "starboard"

    window = dists.min(axis=0) <= colregs.activation_range
    deviation = 0.0
    if window.any():
        deviation = float(_cross_track(own_xy[window], log.global_path.waypoints).max())

    entered = False
    for rec in log.frames:
        if not rec.projections:
            continue
        sel = (times > rec.end_time) & (times <= rec.end_time + ROTATION_PERIOD)
        for j in np.nonzero(sel)[0]:
            p = (own_xy[j, 0], own_xy[j, 1])
            if any(point_in_polygon(p, pr.polygon) for pr in rec.projections):
                entered = True
                break
        if entered:
            break

    if kind in ("head_on", "overtaking"):
        verdict = cpa >= min_cpa and side == "port"
    elif kind == "crossing_right":
        verdict = cpa >= min_cpa and not entered
    elif kind == "crossing_left":
        verdict = deviation < stand_on_max
    else:
        verdict = cpa >= min_cpa

    detail = "cpa %.1f m at t=%.1f s, target to %s; deviation %.1f m%s" % (
        cpa,
        cpa_time,
        side,
        deviation,
        "; entered projection" if entered else "",
    )
    return ComplianceReport(kind, cpa, cpa_time, side, deviation, verdict, detail)


# ---------------------------------------------------------------------------
# presets and scenario files


def river_chart() -> Chart:
    """A straight north-running river, 500 m wide with 20 m banks."""
    west = Polygon([(0.0, 0.0), (20.0, 0.0), (20.0, 800.0), (0.0, 800.0)])
    east = Polygon([(480.0, 0.0), (500.0, 0.0), (500.0, 800.0), (480.0, 800.0)])
    return Chart(
        land_polygons=(west, east),
        origin=UtmPoint(0.0, 0.0),
        cell_size=1.0,
        width=500,
        height=800,
    )


def _preset(kind: str, target: TargetScript, duration: float, seed: int) -> Scenario:
    return Scenario(
        chart=river_chart(),
        ownship_start=OwnshipState(UtmPoint(250.0, 100.0), 0.0, 3.0, 0.0),
        global_path=GlobalPath(Polyline([(250.0, 100.0), (250.0, 700.0)])),
        targets=(target,),
        duration=duration,
        seed=seed,
        kind=kind,
        name=kind,
    )


# Speeds are sized to the radar's effective detection radius: at 512
# lines per rotation adjacent rays land ~1.4 m apart at 115 m, beyond
# which painted cells no longer join into components, so encounters must
# leave maneuvering time after the target first becomes trackable.
PRESETS: dict[str, Callable[[], Scenario]] = {
    "head_on": lambda: _preset(
        "head_on",
        # A beamy workboat: the bow-on echo must subtend three rays early
        # enough for the give-way maneuver to finish with room to spare.
        TargetScript(UtmPoint(250.0, 500.0), math.pi, 1.0, 12.0, 4.5),
        150.0,
        101,
    ),
    "overtaking": lambda: _preset(
        "overtaking", TargetScript(UtmPoint(250.0, 160.0), 0.0, 1.2), 150.0, 102
    ),
    "crossing_right": lambda: _preset(
        "crossing_right",
        TargetScript(UtmPoint(373.0, 470.0), 1.5 * math.pi, 1.0),
        170.0,
        103,
    ),
    "crossing_left": lambda: _preset(
        "crossing_left",
        TargetScript(UtmPoint(35.0, 470.0), 0.5 * math.pi, 1.5),
        170.0,
        104,
    ),
}


def preset(name: str) -> Scenario:
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(
            "unknown scenario %r; presets: %s" % (name, ", ".join(sorted(PRESETS)))
        ) from None


def load_scenario(path: str, chart_loader: Callable[[str], Chart]) -> Scenario:
    """Parse a scenario file.

    Key-value header (``key = value``) plus one ``TARGET`` line per
    vessel: ``TARGET <easting> <northing> <heading_deg> <speed_mps>
    <length_m> <width_m>``.  Headings are in degrees.  The ``chart`` key
    names a chart file resolved relative to the scenario file.
    """
    import os

    keys: dict[str, str] = {}
    targets: list[TargetScript] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, rawline in enumerate(fh, start=1):
            text = rawline.split("#", 1)[0].strip()
            if not text:
                continue
            if text.startswith("TARGET"):
                fields = text.split()
                if len(fields) != 7:
                    raise ScenarioError(line_no, "TARGET needs 6 fields, got %d" % (len(fields) - 1))
                try:
                    e, n, hdg, spd, length, width = (float(x) for x in fields[1:])
                except ValueError:
                    raise ScenarioError(line_no, "non-numeric TARGET field") from None
                try:
                    targets.append(
                        TargetScript(
                            UtmPoint(e, n),
                            normalize_angle(math.radians(hdg)),
                            spd,
                            length,
                            width,
                        )
                    )
                except ValueError as exc:
                    raise ScenarioError(line_no, str(exc)) from None
                continue
            if "=" not in text:
                raise ScenarioError(line_no, "expected key = value or TARGET line")
            key, _, value = text.partition("=")
            keys[key.strip()] = value.strip()

    def need(key: str) -> str:
        if key not in keys:
            raise ScenarioError(0, "missing required key %r" % key)
        return keys[key]

    chart = chart_loader(os.path.join(os.path.dirname(os.path.abspath(path)), need("chart")))
    try:
        oe, on, ohdg, ospd = (float(x) for x in need("ownship").split())
    except ValueError:
        raise ScenarioError(0, "ownship needs: easting northing heading_deg speed") from None
    wps = []
    for part in need("path").split(";"):
        e_s, n_s = part.split(",")
        wps.append((float(e_s), float(n_s)))
    try:
        return Scenario(
            chart=chart,
            ownship_start=OwnshipState(
                UtmPoint(oe, on), normalize_angle(math.radians(ohdg)), ospd, 0.0
            ),
            global_path=GlobalPath(Polyline(wps)),
            targets=tuple(targets),
            duration=float(need("duration")),
            seed=int(keys.get("seed", "0")),
            kind=keys.get("kind", "generic"),
            name=keys.get("name", os.path.basename(path)),
        )
    except ValueError as exc:
        raise ScenarioError(0, str(exc)) from None
