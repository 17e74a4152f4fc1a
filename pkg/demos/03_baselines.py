"""Reference schedulers on the bundled instance and on a small random one."""

import numpy as np

from eosched.baselines import exact, fcfs, greedy_reward, random_policy
from eosched.instance_model import OBSERVATION, REFERENCE_ORBIT, Instance, SatelliteConfig, TaskSpec, load_bundled_instance

inst = load_bundled_instance()
for res in (fcfs(inst), greedy_reward(inst), random_policy(inst, seed=0)):
    print(f"{res.method:<7} reward {res.reward:3d}  accepted {len(res.accepted_indices)}")

# exact search only scales to a couple of dozen tasks
rng = np.random.default_rng(1)
tasks = []
for i in range(1, 13):
    ws = int(rng.integers(0, 250))
    tasks.append(TaskSpec(i, OBSERVATION, ws, ws + int(rng.integers(5, 30)),
                          round(float(rng.uniform(-30, 30)), 2), 1, int(rng.integers(1, 10))))
small = Instance(REFERENCE_ORBIT, SatelliteConfig(max_storage=5), tuple(tasks), (0, 300))

print()
for res in (fcfs(small), greedy_reward(small), exact(small)):
    print(f"{res.method:<7} reward {res.reward:3d}  decisions {''.join(map(str, res.decisions))}")
