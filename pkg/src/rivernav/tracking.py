"""Multi-target tracking: constant-velocity Kalman filters with global
nearest-neighbour association.

State is [p_e, p_n, v_e, v_n] in UTM meters / meters-per-second.  Process
noise models white acceleration through the discrete kinematic integral, so
Q = G diag(sa_e^2, sa_n^2) G^T with G = [[dt^2/2, 0], [0, dt^2/2], [dt, 0],
[0, dt]].  Position-only measurements carry independent easting/northing
noise.

Association maximizes the summed log-likelihood of matched pairs under the
predicted measurement densities; unmatched entities score the log of the
gate density floor.  Pairs farther than the gate range or below the density
floor can never match.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import Polygon, UtmPoint

# Innovation covariance condition number above which an update is refused.
SINGULAR_COND = 1e12

# Matrix sizes at or below which association is solved by exhaustive
# enumeration (with a deterministic lexicographic tie-break); larger
# problems fall back to a rectangular optimal-assignment solver.
EXHAUSTIVE_LIMIT = 5

_H = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])

_NEG_INF = -1e30


class NonPositiveDt(ValueError):
    """Prediction requested over a non-positive time step."""


class SingularInnovation(ValueError):
    """Innovation covariance is numerically singular; skip the update."""


@dataclass
class KfParams:
    """Filter noise configuration (meters, seconds)."""

    sigma_ax: float = 0.5  # easting acceleration noise, m/s^2
    sigma_ay: float = 0.5  # northing acceleration noise, m/s^2
    sigma_px: float = 3.0  # easting measurement noise, m
    sigma_py: float = 3.0  # northing measurement noise, m
    init_pos_var: float = 9.0  # m^2
    init_vel_var: float = 25.0  # (m/s)^2


@dataclass
class TrackerParams:
    """Association and lifecycle configuration on top of the filter."""

    kf: KfParams = field(default_factory=KfParams)
    range_max: float = 25.0  # hard association gate, m
    pdf_threshold: float = 1e-6  # likelihood gate / null-match density
    max_misses: int = 2  # coasted frames tolerated before deletion
    min_updates_for_reporting: int = 2  # updates before rule logic sees a track


@dataclass
class KfState:
    x: np.ndarray  # shape (4,)
    P: np.ndarray  # shape (4, 4)

    @property
    def position(self) -> UtmPoint:
        return UtmPoint(float(self.x[0]), float(self.x[1]))

    @property
    def velocity(self) -> tuple[float, float]:
        return float(self.x[2]), float(self.x[3])

    @property
    def speed(self) -> float:
        return math.hypot(float(self.x[2]), float(self.x[3]))


@dataclass
class Measurement:
    z: UtmPoint
    timestamp: float
    source_polygon: Polygon | None = None


@dataclass
class Track:
    id: int
    state: KfState
    last_update: float  # time the state is valid at
    misses: int = 0
    hits: int = 1  # measurement updates absorbed (created from one)
    history: list[tuple[float, UtmPoint]] = field(default_factory=list)
    latest_polygon: Polygon | None = None

    @property
    def position(self) -> UtmPoint:
        return self.state.position

    @property
    def velocity(self) -> tuple[float, float]:
        return self.state.velocity

    @property
    def speed(self) -> float:
        return self.state.speed


@dataclass
class Assignment:
    pairs: list[tuple[int, int]]  # (track index, measurement index)
    unmatched_tracks: list[int]
    unmatched_measurements: list[int]


def transition_matrix(dt: float) -> np.ndarray:
    f = np.eye(4)
    f[0, 2] = dt
    f[1, 3] = dt
    return f


def process_noise(dt: float, sigma_ax: float, sigma_ay: float) -> np.ndarray:
    g = np.array([[0.5 * dt * dt, 0.0], [0.0, 0.5 * dt * dt], [dt, 0.0], [0.0, dt]])
    return g @ np.diag([sigma_ax**2, sigma_ay**2]) @ g.T


def measurement_noise(params: KfParams) -> np.ndarray:
    return np.diag([params.sigma_px**2, params.sigma_py**2])


def _symmetrized(p: np.ndarray) -> np.ndarray:
    return 0.5 * (p + p.T)


def kf_init(m: Measurement, params: KfParams, track_id: int) -> Track:
    """Open a track on an unassociated measurement: zero velocity prior."""
    x = np.array([m.z.easting, m.z.northing, 0.0, 0.0])
    p = np.diag([params.init_pos_var, params.init_pos_var, params.init_vel_var, params.init_vel_var])
    track = Track(
        id=track_id,
        state=KfState(x, p),
        last_update=m.timestamp,
        latest_polygon=m.source_polygon,
    )
    track.history.append((m.timestamp, track.position))
    return track


def kf_predict(state: KfState, dt: float, params: KfParams) -> KfState:
    """Propagate mean and covariance through the CV model."""
    if dt <= 0.0:
        raise NonPositiveDt("dt must be positive, got %r" % dt)
    f = transition_matrix(dt)
    q = process_noise(dt, params.sigma_ax, params.sigma_ay)
    x = f @ state.x
    p = _symmetrized(f @ state.P @ f.T + q)
    return KfState(x, p)


def kf_update(state: KfState, m: Measurement, params: KfParams) -> KfState:
    """Absorb a position measurement.

    Raises:
        SingularInnovation: innovation covariance condition number exceeds
            SINGULAR_COND; the caller should coast instead of updating.
    """
    z = np.array([m.z.easting, m.z.northing])
    s = _H @ state.P @ _H.T + measurement_noise(params)
    if np.linalg.cond(s) > SINGULAR_COND:
        raise SingularInnovation("innovation covariance is singular")
    y = z - _H @ state.x
    k = state.P @ _H.T @ np.linalg.inv(s)
    x = state.x + k @ y
    p = _symmetrized((np.eye(4) - k @ _H) @ state.P)
    return KfState(x, p)


def innovation_covariance(state: KfState, params: KfParams) -> np.ndarray:
    return _H @ state.P @ _H.T + measurement_noise(params)


def gate_likelihood(state: KfState, m: Measurement, params: TrackerParams) -> float:
    """Gated bivariate-normal density of a measurement under a predicted state.

    Returns 0 when the Euclidean innovation exceeds range_max or the
    density falls below pdf_threshold; otherwise the density itself.
    """
    z = np.array([m.z.easting, m.z.northing])
    mean = _H @ state.x
    y = z - mean
    if math.hypot(y[0], y[1]) > params.range_max:
        return 0.0
    s = innovation_covariance(state, params.kf)
    det = float(np.linalg.det(s))
    if det <= 0 or np.linalg.cond(s) > SINGULAR_COND:
        return 0.0
    quad = float(y @ np.linalg.solve(s, y))
    density = math.exp(-0.5 * quad) / (2.0 * math.pi * math.sqrt(det))
    if density < params.pdf_threshold:
        return 0.0
    return density


def _enumerate_assignment(log_lik: dict[tuple[int, int], float], n: int, m: int, null_score: float):
    """Exhaustive search over partial matchings, lexicographically tie-broken.

    Recursion is over tracks (each either null or matched to an unused
    measurement), so the search space is the count of partial matchings,
    not 2^pairs.
    """
    best_pairs: tuple[tuple[int, int], ...] | None = None
    best_score = -math.inf

    def rec(i: int, used_m: frozenset, pairs: tuple, score: float):
        nonlocal best_pairs, best_score
        if i == n:
            total = score + null_score * ((n - len(pairs)) + (m - len(used_m)))
            if total > best_score + 1e-12 or (
                abs(total - best_score) <= 1e-12
                and (best_pairs is None or pairs < best_pairs)
            ):
                best_pairs, best_score = pairs, total
            return
        for j in range(m):
            if j not in used_m and (i, j) in log_lik:
                rec(i + 1, used_m | {j}, pairs + ((i, j),), score + log_lik[(i, j)])
        rec(i + 1, used_m, pairs, score)

    rec(0, frozenset(), (), 0.0)
    return list(best_pairs or ())


def _lsa_assignment(log_lik: dict[tuple[int, int], float], n: int, m: int, null_score: float):
    """Padded rectangular assignment for larger problems."""
    size = n + m
    cost = np.full((size, size), _NEG_INF)
    for (i, j), v in log_lik.items():
        cost[i, j] = v
    for i in range(n):
        cost[i, m + i] = null_score  # track i unmatched
    for j in range(m):
        cost[n + j, j] = null_score  # measurement j unmatched
    cost[n:, m:] = 0.0  # null-null padding
    rows, cols = linear_sum_assignment(cost, maximize=True)
    return sorted(
        (int(i), int(j)) for i, j in zip(rows, cols) if i < n and j < m and cost[i, j] > _NEG_INF
    )


def associate(
    tracks: Sequence[Track], measurements: Sequence[Measurement], params: TrackerParams
) -> Assignment:
    """Globally optimal gated assignment of measurements to tracks.

    Maximizes the sum of log gate_likelihood over matched pairs, with each
    unmatched track or measurement contributing log(pdf_threshold).  Gated
    (zero-likelihood) pairs can never match.  Problems up to
    EXHAUSTIVE_LIMIT x EXHAUSTIVE_LIMIT are solved exhaustively with ties
    broken toward the lexicographically smallest (track index, measurement
    index) pair list.
    """
    n, m = len(tracks), len(measurements)
    log_lik: dict[tuple[int, int], float] = {}
    for i, track in enumerate(tracks):
        for j, meas in enumerate(measurements):
            lik = gate_likelihood(track.state, meas, params)
            if lik > 0.0:
                log_lik[(i, j)] = math.log(lik)
    null_score = math.log(params.pdf_threshold)

    if not log_lik:
        pairs: list[tuple[int, int]] = []
    elif n <= EXHAUSTIVE_LIMIT and m <= EXHAUSTIVE_LIMIT:
        pairs = _enumerate_assignment(log_lik, n, m, null_score)
    else:
        pairs = _lsa_assignment(log_lik, n, m, null_score)

    matched_t = {i for i, _ in pairs}
    matched_m = {j for _, j in pairs}
    return Assignment(
        pairs=sorted(pairs),
        unmatched_tracks=[i for i in range(n) if i not in matched_t],
        unmatched_measurements=[j for j in range(m) if j not in matched_m],
    )


def step(
    tracks: list[Track],
    candidates: Sequence,
    frame_time: float,
    params: TrackerParams,
    id_source: Iterable[int] | None = None,
) -> list[Track]:
    """Advance the track set by one radar frame.

    candidates may be radar TargetCandidates (polygon + centroid) or bare
    Measurements.  All tracks are predicted to frame_time; matched tracks
    update and reset their miss count, unmatched tracks coast on the
    prediction (their stored contour translated by the predicted
    displacement), tracks exceeding max_misses are dropped, and leftover
    measurements open new tracks.  Track ids from id_source are never
    reused.
    """
    if id_source is None:
        id_source = _default_ids
    measurements = [
        c
        if isinstance(c, Measurement)
        else Measurement(z=c.centroid, timestamp=frame_time, source_polygon=c.polygon)
        for c in candidates
    ]

    predicted: list[KfState] = []
    survivors: list[Track] = []
    for track in tracks:
        dt = frame_time - track.last_update
        if dt <= 0.0:
            raise NonPositiveDt(
                "frame time %r is not after track %d (last %r)" % (frame_time, track.id, track.last_update)
            )
        predicted.append(kf_predict(track.state, dt, params.kf))

    work = [
        Track(
            id=t.id,
            state=s,
            last_update=frame_time,
            misses=t.misses,
            hits=t.hits,
            history=t.history,
            latest_polygon=t.latest_polygon,
        )
        for t, s in zip(tracks, predicted)
    ]
    assignment = associate(work, measurements, params)

    def coast(i: int) -> None:
        track = work[i]
        track.misses += 1
        if track.latest_polygon is not None:
            # Carry the contour along with the predicted displacement.
            old = tracks[i].state.position
            new = track.state.position
            track.latest_polygon = track.latest_polygon.translated(
                new.easting - old.easting, new.northing - old.northing
            )

    for i, j in assignment.pairs:
        track = work[i]
        meas = measurements[j]
        try:
            track.state = kf_update(track.state, meas, params.kf)
        except SingularInnovation:
            # Degenerate geometry: keep the prediction and coast this frame.
            coast(i)
        else:
            track.misses = 0
            track.hits += 1
            if meas.source_polygon is not None:
                track.latest_polygon = meas.source_polygon

    for i in assignment.unmatched_tracks:
        coast(i)

    out: list[Track] = []
    for track in work:
        if track.misses > params.max_misses:
            continue
        track.history.append((frame_time, track.position))
        out.append(track)

    for j in assignment.unmatched_measurements:
        out.append(kf_init(measurements[j], params.kf, next(iter(id_source))))

    return out


class _IdCounter:
    def __init__(self, start: int = 1):
        self._it = itertools.count(start)

    def __iter__(self):
        return self._it


_default_ids = _IdCounter()


class Tracker:
    """Stateful wrapper owning the live track list and the id counter."""

    def __init__(self, params: TrackerParams | None = None):
        self.params = params or TrackerParams()
        self.tracks: list[Track] = []
        self._ids = _IdCounter(1)

    def step(self, candidates: Sequence, frame_time: float) -> list[Track]:
        self.tracks = step(self.tracks, candidates, frame_time, self.params, self._ids)
        return self.tracks

    def reported(self) -> list[Track]:
        """Tracks mature enough for rule-based decision logic."""
        return [
            t for t in self.tracks if t.hits >= self.params.min_updates_for_reporting
        ]
