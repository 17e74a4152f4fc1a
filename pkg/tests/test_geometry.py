import dataclasses
import math

import numpy as np
import pytest

from eosched import geometry as geo
from eosched.instance_model import (
    REFERENCE_ORBIT,
    SatelliteConfig,
    Target,
    TaskSpec,
    bundled_targets,
)

# Crossing instants from tests/oracles/orbit_oracle.py (numerical two-body
# integration, 1 s scan, linear interpolation), seconds after epoch.
ORACLE_CROSSINGS = {
    1: 173.59, 2: 176.48, 3: 193.48, 4: 201.02, 5: 227.16, 6: 257.77, 7: 269.68,
    8: 298.57, 9: 293.95, 10: 323.76, 11: 341.68, 12: 368.04, 13: 405.14, 14: 420.20,
    15: 449.61, 16: 447.65, 17: 474.34, 18: 489.72, 19: 524.51, 20: 537.22, 21: 613.06,
    22: 631.66, 23: 627.91, 24: 631.32, 25: 639.81, 26: 661.45, 27: 708.59, 28: 720.54,
    29: 737.43, 30: 745.38, 31: 764.50, 32: 787.70, 33: 890.53, 34: 923.37, 35: 953.56,
    36: 971.30, 37: 1005.76, 38: 1025.78, 39: 1037.29, 40: 1181.94, 41: 1191.63,
    42: 1206.16, 43: 1218.19, 44: 1236.41, 45: 1245.77, 46: 1273.66, 47: 1286.72,
    48: 1301.31, 49: 1307.84, 50: 1356.03,
}
# atan2(Re sin 1deg, a - Re cos 1deg) for a = 6800 km, from the same oracle module.
ROLL_ONE_DEGREE_CROSS_TRACK = 14.748837521572286
CIRCULAR_PERIOD_6800 = 5580.515896021646

EQUATORIAL = dataclasses.replace(REFERENCE_ORBIT, eccentricity=0.0, inclination=0.0,
                                 raan=0.0, arg_perigee=0.0)
CIRCULAR = dataclasses.replace(REFERENCE_ORBIT, eccentricity=0.0)


def test_equatorial_orbit_stays_on_equator():
    for t in np.linspace(0, 6000, 61):
        assert geo.propagate(EQUATORIAL, t).sub_lat == pytest.approx(0.0, abs=1e-12)


def test_reference_orbit_starts_at_max_latitude():
    # argument of latitude is 90 deg at epoch, so the latitude equals the inclination
    s = geo.propagate(REFERENCE_ORBIT, 0.0)
    assert s.sub_lat == pytest.approx(55.0, abs=1e-9)
    assert s.altitude == pytest.approx(6800 * 0.99 - 6378.137, abs=1e-6)


def test_circular_orbit_is_periodic_in_latitude():
    T = geo.orbital_period(CIRCULAR)
    assert T == pytest.approx(CIRCULAR_PERIOD_6800, rel=1e-12)
    for t in (0.0, 137.0, 900.0, 2500.0):
        assert geo.propagate(CIRCULAR, t + T).sub_lat == pytest.approx(
            geo.propagate(CIRCULAR, t).sub_lat, abs=1e-6)


def test_longitude_wrapped():
    for t in np.linspace(0, 20000, 101):
        s = geo.propagate(REFERENCE_ORBIT, t)
        assert -180.0 <= s.sub_lon < 180.0
        assert -90.0 <= s.sub_lat <= 90.0


def test_kepler_nonconvergence_raises(monkeypatch):
    monkeypatch.setattr(geo, "KEPLER_MAX_ITER", 1)
    orbit = dataclasses.replace(REFERENCE_ORBIT, eccentricity=0.9)
    with pytest.raises(geo.PropagationError):
        geo.propagate(orbit, 1234.0)


def test_propagate_deterministic():
    assert geo.propagate(REFERENCE_ORBIT, 321.5) == geo.propagate(REFERENCE_ORBIT, 321.5)


# -- roll angle --------------------------------------------------------------

def _subsat_target(orbit, t, dlat=0.0):
    s = geo.propagate(orbit, t)
    return Target(1, 1, s.sub_lat + dlat, s.sub_lon)


def test_roll_zero_on_track():
    tgt = _subsat_target(EQUATORIAL, 0.0)
    assert geo.roll_angle_for(EQUATORIAL, tgt, 0.0) == pytest.approx(0.0, abs=1e-9)


def test_roll_one_degree_cross_track_matches_spherical_oracle():
    north = _subsat_target(EQUATORIAL, 0.0, +1.0)
    south = _subsat_target(EQUATORIAL, 0.0, -1.0)
    r_n = geo.roll_angle_for(EQUATORIAL, north, 0.0)
    r_s = geo.roll_angle_for(EQUATORIAL, south, 0.0)
    assert abs(r_n) == pytest.approx(ROLL_ONE_DEGREE_CROSS_TRACK, abs=1e-9)
    assert r_n == pytest.approx(-r_s, abs=1e-9)
    # flying east, north is on the left
    assert r_n < 0 < r_s


def test_roll_mirror_antisymmetry_on_inclined_orbit():
    rng = np.random.default_rng(5)
    for _ in range(20):
        t = float(rng.uniform(0, 1800))
        r, v = geo.state_eci(REFERENCE_ORBIT, t)
        _, right, nadir = geo._lvlh(r, v)
        gamma = math.radians(rng.uniform(0.1, 8.0))
        g = geo.gmst_deg(REFERENCE_ORBIT.epoch, t)
        pts = []
        for sign in (+1, -1):
            p = math.cos(gamma) * (-nadir) + sign * math.sin(gamma) * right
            ecef = geo._rot_z(-g) @ p
            pts.append(Target(1, 1, math.degrees(math.asin(ecef[2])),
                              math.degrees(math.atan2(ecef[1], ecef[0]))))
        a, b = (geo.roll_angle_for(REFERENCE_ORBIT, p, t) for p in pts)
        assert a == pytest.approx(-b, abs=1e-9)
        assert abs(a) > 0


# -- crossings and windows ---------------------------------------------------

def test_crossings_match_integration_oracle():
    for tgt in bundled_targets():
        cs = geo.crossing_time(REFERENCE_ORBIT, tgt, (0, 1800))
        assert len(cs) == 1
        assert cs[0] == pytest.approx(ORACLE_CROSSINGS[tgt.id], abs=0.05)


def test_crossing_is_a_sign_change():
    for tgt in bundled_targets()[::7]:
        (tc,) = geo.crossing_time(REFERENCE_ORBIT, tgt, (0, 1800))
        assert geo.along_track_offset(REFERENCE_ORBIT, tgt, tc - 1) > 0
        assert geo.along_track_offset(REFERENCE_ORBIT, tgt, tc + 1) < 0


def test_no_crossing_for_target_on_far_side():
    # antipode of the mid-pass sub-satellite point never comes into view in 30 min
    s = geo.propagate(REFERENCE_ORBIT, 900.0)
    far = Target(1, 1, -s.sub_lat, ((s.sub_lon + 360.0) % 360.0) - 180.0)
    assert geo.crossing_time(REFERENCE_ORBIT, far, (0, 1800)) == []


def test_window_excluded_when_roll_exceeds_limit():
    tgt = bundled_targets()[0]
    (tc,) = geo.crossing_time(REFERENCE_ORBIT, tgt, (0, 1800))
    roll = abs(geo.roll_angle_for(REFERENCE_ORBIT, tgt, tc))
    sat = SatelliteConfig(max_roll=roll * 0.5)
    assert geo.time_window_for(REFERENCE_ORBIT, sat, tgt, tc) is None
    assert geo.time_window_for(REFERENCE_ORBIT, SatelliteConfig(), tgt, tc) is not None


def test_window_symmetric_for_on_track_target():
    tgt = _subsat_target(CIRCULAR, 600.0)
    (tc,) = geo.crossing_time(CIRCULAR, tgt, (0, 1800))
    lo, hi = geo.coverage_interval(CIRCULAR, SatelliteConfig(), tgt, tc)
    assert tc - lo == pytest.approx(hi - tc, rel=1e-3)


def test_windows_bracket_crossing_and_cone_edges():
    sat = SatelliteConfig()
    for tgt in bundled_targets():
        (tc,) = geo.crossing_time(REFERENCE_ORBIT, tgt, (0, 1800))
        ws, we = geo.time_window_for(REFERENCE_ORBIT, sat, tgt, tc)
        assert ws < tc < we
        roll = geo.roll_angle_for(REFERENCE_ORBIT, tgt, tc)
        # scan oracle: inside the cone at the crossing, outside just beyond the window
        assert geo.off_axis_angle(REFERENCE_ORBIT, tgt, roll, tc) < 1e-3
        assert geo.off_axis_angle(REFERENCE_ORBIT, tgt, roll, ws - 0.5) > sat.sensor_half_angle
        assert geo.off_axis_angle(REFERENCE_ORBIT, tgt, roll, we + 0.5) > sat.sensor_half_angle


# -- maneuver time -----------------------------------------------------------

PROFILE = geo.ManeuverProfile(1.0, 0.5)


@pytest.mark.parametrize("delta, expected", [(0.0, 0.0), (2.0, 4.0), (0.5, 2.0)])
def test_maneuver_closed_form(delta, expected):
    assert geo.maneuver_time(10.0, 10.0 + delta, PROFILE) == expected


def test_maneuver_symmetric_monotone_continuous():
    rng = np.random.default_rng(2)
    for _ in range(200):
        prof = geo.ManeuverProfile(float(rng.uniform(0.2, 5)), float(rng.uniform(0.1, 3)))
        a, b = rng.uniform(-60, 60, size=2)
        assert geo.maneuver_time(a, b, prof) == geo.maneuver_time(b, a, prof)
        ds = np.sort(rng.uniform(0, 90, size=20))
        ts = [geo.maneuver_time(0.0, d, prof) for d in ds]
        assert all(x <= y for x, y in zip(ts, ts[1:]))
        edge = prof.max_rate ** 2 / prof.accel
        below = geo.maneuver_time(0.0, edge * (1 - 1e-12), prof)
        at = geo.maneuver_time(0.0, edge, prof)
        assert abs(at - below) < 1e-9


def test_maneuver_profile_validation():
    with pytest.raises(ValueError):
        geo.ManeuverProfile(0.0, 1.0)


# -- build_tasks -------------------------------------------------------------

def test_build_tasks_empty():
    assert geo.build_tasks(REFERENCE_ORBIT, SatelliteConfig(), [], (0, 1800)) == []


def test_build_tasks_bundled_targets():
    sat = SatelliteConfig()
    tasks = geo.build_tasks(REFERENCE_ORBIT, sat, bundled_targets(), (0, 1800), geo.DownloadPlan())
    obs = [t for t in tasks if t.kind == "observation"]
    assert len(obs) == 50
    assert all(0 <= t.window_start < t.window_end <= 1800 for t in tasks)
    assert all(abs(t.roll_angle) <= sat.max_roll for t in tasks)
    assert tasks == sorted(tasks, key=lambda t: (t.window_start, t.id))
    assert {t.id for t in obs} == set(range(1, 51))


def test_build_tasks_random_targets_satisfy_invariants():
    rng = np.random.default_rng(8)
    sat = SatelliteConfig(max_roll=30.0)
    track = [geo.propagate(REFERENCE_ORBIT, t) for t in np.linspace(100, 1700, 40)]
    targets = []
    for i, s in enumerate(track, start=1):
        targets.append(Target(i, int(rng.integers(1, 9)),
                              float(np.clip(s.sub_lat + rng.normal(0, 3), -90, 90)),
                              float(((s.sub_lon + rng.normal(0, 3) + 180) % 360) - 180)))
    tasks = geo.build_tasks(REFERENCE_ORBIT, sat, targets, (0, 1800), geo.DownloadPlan(400, 20))
    assert tasks
    for t in tasks:
        assert isinstance(t, TaskSpec)
        assert 0 <= t.window_start < t.window_end <= 1800
        assert abs(t.roll_angle) <= 30.0
