"""Shared builders for small synthetic instances."""

import numpy as np

from eosched.instance_model import (
    DOWNLOAD,
    OBSERVATION,
    REFERENCE_ORBIT,
    Instance,
    SatelliteConfig,
    TaskSpec,
)


def make_instance(tasks, horizon=(0, 1000), **sat):
    sat.setdefault("ltw_scaling_factor", float(horizon[1] - horizon[0]))
    return Instance(REFERENCE_ORBIT, SatelliteConfig(**sat), tuple(tasks), horizon)


def obs(id, ws, we, roll=0.0, reward=1, mem=1):
    return TaskSpec(id, OBSERVATION, ws, we, roll, mem, reward)


def dl(id, ws, we, mem=-4):
    return TaskSpec(id, DOWNLOAD, ws, we, 0.0, mem, 0)


def random_instance(rng: np.random.Generator, n_tasks: int, horizon=(0, 600),
                    max_storage=None, download_frac=0.15) -> Instance:
    """Dense random tasks so windows, slews and storage all bind."""
    max_storage = int(rng.integers(3, 9)) if max_storage is None else max_storage
    tasks = []
    for i in range(1, n_tasks + 1):
        dur = int(rng.integers(5, 40))
        ws = int(rng.integers(horizon[0], horizon[1] - dur))
        if rng.random() < download_frac:
            tasks.append(dl(i, ws, ws + dur, mem=-int(rng.integers(1, 5))))
        else:
            tasks.append(obs(i, ws, ws + dur, roll=round(float(rng.uniform(-40, 40)), 3),
                             reward=int(rng.integers(1, 10)), mem=int(rng.integers(1, 3))))
    return make_instance(tasks, horizon, max_storage=max_storage)
