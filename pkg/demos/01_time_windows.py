"""Turn ground targets into time windows and roll angles.

Propagates the reference orbit, finds when each target crosses the plane
normal to the velocity, and reads the off-nadir roll needed to see it.
"""

from eosched.geometry import DownloadPlan, build_tasks, crossing_time, propagate, roll_angle_for
from eosched.instance_model import REFERENCE_ORBIT, SatelliteConfig, bundled_targets

orbit = REFERENCE_ORBIT
sat = SatelliteConfig()
targets = bundled_targets()

# where the satellite is at a few instants
for t in (0, 600, 1200, 1800):
    s = propagate(orbit, t)
    print(f"t={t:5d}s  lat {s.sub_lat:8.3f}  lon {s.sub_lon:9.3f}  alt {s.altitude:7.1f} km")

# a single target by hand
tgt = targets[0]
t_cross = crossing_time(orbit, tgt, (0, 1800))[0]
print(f"\ntarget {tgt.id} crosses at {t_cross:.2f}s, roll {roll_angle_for(orbit, tgt, t_cross):+.3f} deg")

# all of them, plus a download pass every 5 minutes
tasks = build_tasks(orbit, sat, targets, (0, 1800), DownloadPlan())
print(f"\n{len(tasks)} tasks; first ten:")
for task in tasks[:10]:
    print(f"  {task.id:5d} {task.kind:<11} [{task.window_start}, {task.window_end}]  roll {task.roll_angle:+7.3f}")
