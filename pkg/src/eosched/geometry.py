"""Two-body propagation, roll geometry and visibility windows.

Spherical Earth, uniform sidereal rotation, no perturbations. Angles are in
degrees at the API boundary and radians internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .instance_model import (
    DOWNLOAD,
    EARTH_RADIUS_KM,
    OBSERVATION,
    OrbitElements,
    SatelliteConfig,
    Target,
    TaskSpec,
    task_order,
)

MU_EARTH = 398600.4418  # km^3/s^2
EARTH_ROTATION_DEG_S = 360.0 / 86164.0905
_J2000 = datetime(2000, 1, 1, 12, 0, 0, tzinfo=timezone.utc)

KEPLER_TOL = 1e-10
KEPLER_MAX_ITER = 50


class PropagationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GroundTrackSample:
    t: float
    sub_lat: float
    sub_lon: float
    altitude: float


@dataclass(frozen=True)
class ManeuverProfile:
    max_rate: float = 1.0
    accel: float = 0.5

    def __post_init__(self):
        if not (self.max_rate > 0 and self.accel > 0):
            raise ValueError("maneuver rate and acceleration must be positive")

    @classmethod
    def from_satellite(cls, sat: SatelliteConfig) -> "ManeuverProfile":
        return cls(sat.max_roll_rate, sat.roll_accel)


def maneuver_time(from_roll: float, to_roll: float, profile: ManeuverProfile) -> float:
    """Slew time under an accelerate / coast / decelerate profile."""
    delta = abs(to_roll - from_roll)
    if delta == 0.0:
        return 0.0
    w, a = profile.max_rate, profile.accel
    if delta >= w * w / a:
        return delta / w + w / a
    return 2.0 * math.sqrt(delta / a)


# -- orbit ------------------------------------------------------------------

def gmst_deg(epoch: datetime, t: float = 0.0) -> float:
    """Linearised Greenwich sidereal angle at ``epoch + t`` seconds."""
    days = (epoch - _J2000).total_seconds() / 86400.0
    gmst0 = 280.46061837 + 360.98564736629 * days
    return (gmst0 + EARTH_ROTATION_DEG_S * t) % 360.0


def _solve_kepler(mean_anomaly: float, e: float) -> float:
    E = mean_anomaly if e < 0.8 else math.pi
    for _ in range(KEPLER_MAX_ITER):
        step = (E - e * math.sin(E) - mean_anomaly) / (1.0 - e * math.cos(E))
        E -= step
        if abs(step) < KEPLER_TOL:
            return E
    raise PropagationError(f"Kepler iteration did not converge (e={e})")


def orbital_period(orbit: OrbitElements) -> float:
    return 2.0 * math.pi * math.sqrt(orbit.semi_major_axis ** 3 / MU_EARTH)


def _rotation(orbit: OrbitElements) -> np.ndarray:
    O, i, w = (math.radians(v) for v in (orbit.raan, orbit.inclination, orbit.arg_perigee))
    cO, sO, ci, si, cw, sw = (math.cos(O), math.sin(O), math.cos(i),
                              math.sin(i), math.cos(w), math.sin(w))
    # perifocal -> inertial
    return np.array([
        [cO * cw - sO * sw * ci, -cO * sw - sO * cw * ci, sO * si],
        [sO * cw + cO * sw * ci, -sO * sw + cO * cw * ci, -cO * si],
        [sw * si, cw * si, ci],
    ])


def state_eci(orbit: OrbitElements, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Inertial position (km) and velocity (km/s) at ``t`` seconds after epoch."""
    a, e = orbit.semi_major_axis, orbit.eccentricity
    n = math.sqrt(MU_EARTH / a ** 3)
    nu0 = math.radians(orbit.true_anomaly)
    E0 = 2.0 * math.atan2(math.sqrt(1 - e) * math.sin(nu0 / 2), math.sqrt(1 + e) * math.cos(nu0 / 2))
    M = E0 - e * math.sin(E0) + n * t
    E = _solve_kepler(math.remainder(M, 2 * math.pi), e)
    cE, sE = math.cos(E), math.sin(E)
    b = a * math.sqrt(1 - e * e)
    r = a * (1 - e * cE)
    pos = np.array([a * (cE - e), b * sE, 0.0])
    edot = n * a / r
    vel = np.array([-a * sE * edot, b * cE * edot, 0.0])
    R = _rotation(orbit)
    return R @ pos, R @ vel


def _rot_z(angle_deg: float) -> np.ndarray:
    c, s = math.cos(math.radians(angle_deg)), math.sin(math.radians(angle_deg))
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def propagate(orbit: OrbitElements, t: float) -> GroundTrackSample:
    """Sub-satellite point at ``t`` seconds after epoch."""
    r_eci, _ = state_eci(orbit, t)
    r = _rot_z(-gmst_deg(orbit.epoch, t)) @ r_eci
    norm = float(np.linalg.norm(r))
    lat = math.degrees(math.asin(r[2] / norm))
    lon = math.degrees(math.atan2(r[1], r[0]))
    lon = (lon + 180.0) % 360.0 - 180.0
    return GroundTrackSample(t, lat, lon, norm - EARTH_RADIUS_KM)


def target_eci(orbit: OrbitElements, target: Target, t: float) -> np.ndarray:
    lat, lon = math.radians(target.latitude), math.radians(target.longitude)
    ecef = EARTH_RADIUS_KM * np.array([math.cos(lat) * math.cos(lon),
                                       math.cos(lat) * math.sin(lon),
                                       math.sin(lat)])
    return _rot_z(gmst_deg(orbit.epoch, t)) @ ecef


def _along_track(orbit: OrbitElements, target: Target, t: float) -> tuple[float, bool]:
    """Projection of the line of sight on the velocity, and whether the target is in view."""
    r, v = state_eci(orbit, t)
    p = target_eci(orbit, target, t)
    d = p - r
    visible = float(p @ r) > EARTH_RADIUS_KM ** 2
    return float(d @ v) / float(np.linalg.norm(v)), visible


def along_track_offset(orbit: OrbitElements, target: Target, t: float) -> float:
    return _along_track(orbit, target, t)[0]


def _lvlh(r: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Velocity-aligned frame: forward, right, and the nadir component normal to the velocity."""
    fwd = v / np.linalg.norm(v)
    nadir = -r / np.linalg.norm(r)
    down = nadir - (nadir @ fwd) * fwd
    down /= np.linalg.norm(down)
    right = np.cross(down, fwd)
    return fwd, right, down


def roll_angle_for(orbit: OrbitElements, target: Target, t_cross: float) -> float:
    """Signed off-nadir angle to the target in the plane normal to the velocity.

    Positive when the target lies right of the ground track (looking along
    the direction of flight).
    """
    r, v = state_eci(orbit, t_cross)
    d = target_eci(orbit, target, t_cross) - r
    _, right, nadir = _lvlh(r, v)
    down, side = float(d @ nadir), float(d @ right)
    if side == 0.0 and down > 0.0:
        return 0.0
    return math.degrees(math.atan2(side, down))


def crossing_time(orbit: OrbitElements, target: Target, horizon: tuple[float, float],
                  step: float = 10.0, tol: float = 1e-3) -> list[float]:
    """Instants in ``horizon`` at which the target crosses the satellite's normal plane.

    Only approaching-to-receding crossings with the target above the
    satellite's horizon are reported.
    """
    start, end = horizon
    ts = list(np.arange(start, end, step)) + [end]
    out = []
    prev_t = ts[0]
    prev_f, _ = _along_track(orbit, target, prev_t)
    for t in ts[1:]:
        f, _ = _along_track(orbit, target, t)
        if prev_f > 0.0 >= f:
            lo, hi = prev_t, t
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if _along_track(orbit, target, mid)[0] > 0.0:
                    lo = mid
                else:
                    hi = mid
            root = 0.5 * (lo + hi)
            if _along_track(orbit, target, root)[1]:
                out.append(root)
        prev_t, prev_f = t, f
    return out


def off_axis_angle(orbit: OrbitElements, target: Target, roll: float, t: float) -> float:
    """Angle (deg) between the sensor axis held at ``roll`` and the target line of sight."""
    r, v = state_eci(orbit, t)
    d = target_eci(orbit, target, t) - r
    _, right, nadir = _lvlh(r, v)
    phi = math.radians(roll)
    axis = math.cos(phi) * nadir + math.sin(phi) * right
    c = float(d @ axis) / float(np.linalg.norm(d))
    return math.degrees(math.acos(max(-1.0, min(1.0, c))))


def coverage_interval(orbit: OrbitElements, satellite: SatelliteConfig, target: Target,
                      t_cross: float, tol: float = 1e-3) -> tuple[float, float] | None:
    """Real-valued interval around ``t_cross`` with the target inside the sensor cone."""
    roll = roll_angle_for(orbit, target, t_cross)
    if abs(roll) > satellite.max_roll:
        return None
    h = satellite.sensor_half_angle

    def inside(t):
        return off_axis_angle(orbit, target, roll, t) <= h

    edges = []
    for direction in (-1.0, 1.0):
        step = 1.0
        near = t_cross
        far = t_cross + direction * step
        while inside(far):
            near, step = far, step * 2.0
            far = t_cross + direction * step
            if step > 3600.0:
                raise PropagationError("sensor cone never leaves target")
        while abs(far - near) > tol:
            mid = 0.5 * (near + far)
            if inside(mid):
                near = mid
            else:
                far = mid
        edges.append(near)
    return edges[0], edges[1]


def time_window_for(orbit: OrbitElements, satellite: SatelliteConfig, target: Target,
                    t_cross: float) -> tuple[int, int] | None:
    """Integer-second window enclosing the coverage interval, or None if the roll is too large."""
    span = coverage_interval(orbit, satellite, target, t_cross)
    if span is None:
        return None
    return math.floor(span[0]), math.ceil(span[1])


@dataclass(frozen=True)
class DownloadPlan:
    """Synthetic ground-station passes inserted every ``interval`` seconds."""

    interval: int = 300
    duration: int = 30
    memory_delta: int = -4
    offset: int | None = None

    def windows(self, horizon: tuple[int, int]) -> list[tuple[int, int]]:
        if self.interval <= 0:
            return []
        start, end = horizon
        first = start + (self.interval if self.offset is None else self.offset)
        return [(t, t + self.duration) for t in range(first, end - self.duration + 1, self.interval)]


DOWNLOAD_ID_BASE = 9001
REPEAT_ID_STRIDE = 1000


def build_tasks(orbit: OrbitElements, satellite: SatelliteConfig, targets: list[Target],
                horizon: tuple[int, int], downloads: DownloadPlan | None = None,
                observation_memory: int = 1, roll_decimals: int = 3) -> list[TaskSpec]:
    """Observation tasks for every feasible pass of every target, plus download tasks.

    The first pass of a target keeps the target id; later passes in the same
    horizon get ``id + 1000 * k``. Download task ids start at 9001.
    """
    tasks = []
    for target in targets:
        k = 0
        for t_cross in crossing_time(orbit, target, horizon):
            window = time_window_for(orbit, satellite, target, t_cross)
            if window is None:
                continue
            ws, we = max(window[0], horizon[0]), min(window[1], horizon[1])
            if ws >= we:
                continue
            roll = round(roll_angle_for(orbit, target, t_cross), roll_decimals)
            tasks.append(TaskSpec(target.id + REPEAT_ID_STRIDE * k, OBSERVATION, ws, we,
                                  roll, observation_memory, target.reward))
            k += 1
    if downloads is not None:
        for j, (ws, we) in enumerate(downloads.windows(horizon)):
            tasks.append(TaskSpec(DOWNLOAD_ID_BASE + j, DOWNLOAD, ws, we, 0.0,
                                  downloads.memory_delta, 0))
    return sorted(tasks, key=task_order)
