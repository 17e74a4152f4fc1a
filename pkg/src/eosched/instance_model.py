"""Problem data for single-satellite observation scheduling.

Holds targets, tasks, orbit and satellite configuration, and the line-oriented
instance file format::

    # comment
    orbit: a e i raan argp ta epoch
    satellite: M_S phi_max rate accel half_angle ltw_scale
    horizon: start end
    target id reward lat lon
    task id kind ws we roll mem reward

``target`` lines are optional; they carry the ground points the tasks were
generated from so reward tables survive a round trip even when a target has
no feasible pass.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from typing import Iterable

EARTH_RADIUS_KM = 6378.137

OBSERVATION = "observation"
DOWNLOAD = "download"


class InstanceError(ValueError):
    """Raised for malformed instance files or violated invariants."""

    def __init__(self, message: str, line: int | None = None, task_id: int | None = None):
        self.line = line
        self.task_id = task_id
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Target:
    id: int
    reward: int
    latitude: float
    longitude: float

    def __post_init__(self):
        if self.id < 1:
            raise InstanceError(f"target id must be >= 1, got {self.id}")
        if self.reward <= 0:
            raise InstanceError(f"target {self.id}: reward must be positive")
        if not -90.0 <= self.latitude <= 90.0:
            raise InstanceError(f"target {self.id}: latitude out of range")
        if not -180.0 <= self.longitude <= 180.0:
            raise InstanceError(f"target {self.id}: longitude out of range")


@dataclass(frozen=True)
class TaskSpec:
    """One schedulable task. Times are integer seconds from the orbit epoch."""

    id: int
    kind: str
    window_start: int
    window_end: int
    roll_angle: float
    memory_delta: int
    reward: int

    def __post_init__(self):
        if self.kind not in (OBSERVATION, DOWNLOAD):
            raise InstanceError(f"task {self.id}: unknown kind {self.kind!r}")
        if not self.window_start < self.window_end:
            raise InstanceError(f"task {self.id}: window_start must precede window_end")
        if self.kind == OBSERVATION and self.memory_delta <= 0:
            raise InstanceError(f"task {self.id}: observation needs memory_delta > 0")
        if self.kind == DOWNLOAD and self.memory_delta >= 0:
            raise InstanceError(f"task {self.id}: download needs memory_delta < 0")
        if self.reward < 0:
            raise InstanceError(f"task {self.id}: reward must be >= 0")

    @property
    def duration(self) -> int:
        return self.window_end - self.window_start


@dataclass(frozen=True)
class OrbitElements:
    semi_major_axis: float
    eccentricity: float
    inclination: float
    raan: float
    arg_perigee: float
    true_anomaly: float
    epoch: datetime

    def __post_init__(self):
        if self.semi_major_axis <= EARTH_RADIUS_KM:
            raise InstanceError("semi_major_axis must exceed the Earth radius")
        if not 0.0 <= self.eccentricity < 1.0:
            raise InstanceError("eccentricity must lie in [0, 1)")


@dataclass(frozen=True)
class SatelliteConfig:
    max_storage: int = 8
    max_roll: float = 45.0
    max_roll_rate: float = 1.0
    roll_accel: float = 0.5
    sensor_half_angle: float = 5.0
    ltw_scaling_factor: float = 1800.0

    def __post_init__(self):
        for name in ("max_storage", "max_roll", "max_roll_rate", "roll_accel",
                     "sensor_half_angle", "ltw_scaling_factor"):
            if not getattr(self, name) > 0:
                raise InstanceError(f"satellite {name} must be strictly positive")
        if self.max_roll > 90.0:
            raise InstanceError("max_roll must not exceed 90 degrees")


@dataclass(frozen=True)
class Instance:
    orbit: OrbitElements
    satellite: SatelliteConfig
    tasks: tuple[TaskSpec, ...]
    horizon: tuple[int, int]
    targets: tuple[Target, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(sorted(self.tasks, key=task_order)))
        object.__setattr__(self, "targets", tuple(self.targets))
        start, end = self.horizon
        if not start < end:
            raise InstanceError("horizon start must precede horizon end")
        seen: set[int] = set()
        for task in self.tasks:
            if task.id in seen:
                raise InstanceError(f"duplicate task id {task.id}", task_id=task.id)
            seen.add(task.id)
            if task.window_start < start or task.window_end > end:
                raise InstanceError(f"task {task.id}: window outside horizon", task_id=task.id)
            if abs(task.roll_angle) > self.satellite.max_roll:
                raise InstanceError(f"task {task.id}: |roll| exceeds max_roll", task_id=task.id)
        target_ids = [t.id for t in self.targets]
        if len(set(target_ids)) != len(target_ids):
            raise InstanceError("duplicate target id")

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    @property
    def horizon_length(self) -> int:
        return self.horizon[1] - self.horizon[0]

    def task(self, task_id: int) -> TaskSpec:
        for t in self.tasks:
            if t.id == task_id:
                return t
        raise KeyError(f"unknown task id {task_id}")

    def index_of(self, task_id: int) -> int:
        for i, t in enumerate(self.tasks):
            if t.id == task_id:
                return i
        raise KeyError(f"unknown task id {task_id}")


def task_order(task: TaskSpec) -> tuple[int, int]:
    return (task.window_start, task.id)


def total_reward(inst: Instance, chosen_ids: Iterable[int]) -> int:
    """Sum of rewards over ``chosen_ids``; feasibility is not checked.

    Ids resolve against tasks first, then against targets that produced no
    task (the reward table of the instance).
    """
    by_id = {t.id: t.reward for t in inst.targets}
    by_id.update({t.id: t.reward for t in inst.tasks})
    total = 0
    for i in set(chosen_ids):
        if i not in by_id:
            raise KeyError(f"unknown task id {i}")
        total += by_id[i]
    return total


# -- file format ------------------------------------------------------------

def _format_epoch(epoch: datetime) -> str:
    return epoch.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _parse_epoch(text: str) -> datetime:
    try:
        return datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=timezone.utc)
    except ValueError as exc:
        raise ValueError(f"bad epoch {text!r}, expected YYYY-MM-DDTHH:MM:SSZ") from exc


def _num(x: float) -> str:
    return repr(float(x))


def parse_instance(text: str | io.TextIOBase) -> Instance:
    """Parse an instance file. Tasks are re-sorted by window start."""
    if not isinstance(text, str):
        text = text.read()
    orbit = satellite = horizon = None
    tasks: list[TaskSpec] = []
    targets: list[Target] = []
    task_lines: dict[int, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        fields = rest.split()
        try:
            if head == "orbit:":
                _expect(fields, 7, "orbit")
                orbit = OrbitElements(*map(float, fields[:6]), _parse_epoch(fields[6]))
            elif head == "satellite:":
                _expect(fields, 6, "satellite")
                satellite = SatelliteConfig(int(fields[0]), *map(float, fields[1:]))
            elif head == "horizon:":
                _expect(fields, 2, "horizon")
                horizon = (int(fields[0]), int(fields[1]))
            elif head == "target":
                _expect(fields, 4, "target")
                targets.append(Target(int(fields[0]), int(fields[1]),
                                      float(fields[2]), float(fields[3])))
            elif head == "task":
                _expect(fields, 7, "task")
                tasks.append(TaskSpec(int(fields[0]), fields[1], int(fields[2]),
                                      int(fields[3]), float(fields[4]),
                                      int(fields[5]), int(fields[6])))
                task_lines.setdefault(tasks[-1].id, lineno)
            else:
                raise ValueError(f"unknown record {head!r}")
        except InstanceError as exc:
            raise InstanceError(str(exc), lineno) from None
        except ValueError as exc:
            raise InstanceError(str(exc), lineno) from None
    if orbit is None or satellite is None or horizon is None:
        missing = [n for n, v in (("orbit", orbit), ("satellite", satellite),
                                  ("horizon", horizon)) if v is None]
        raise InstanceError(f"missing header line(s): {', '.join(missing)}")
    try:
        return Instance(orbit, satellite, tuple(tasks), horizon, tuple(targets))
    except InstanceError as exc:
        if exc.task_id is None:
            raise
        raise InstanceError(str(exc), task_lines.get(exc.task_id), exc.task_id) from None


def _expect(fields: list[str], n: int, what: str) -> None:
    if len(fields) != n:
        raise ValueError(f"{what} line needs {n} fields, got {len(fields)}")


def serialize_instance(inst: Instance) -> str:
    o, s = inst.orbit, inst.satellite
    lines = [
        "orbit: " + " ".join(_num(v) for v in (o.semi_major_axis, o.eccentricity,
                                               o.inclination, o.raan, o.arg_perigee,
                                               o.true_anomaly)) + " " + _format_epoch(o.epoch),
        "satellite: " + " ".join([str(s.max_storage)] + [_num(v) for v in (
            s.max_roll, s.max_roll_rate, s.roll_accel, s.sensor_half_angle,
            s.ltw_scaling_factor)]),
        f"horizon: {inst.horizon[0]} {inst.horizon[1]}",
    ]
    if inst.targets:
        lines.append("# target id reward lat lon")
        lines += [f"target {t.id} {t.reward} {_num(t.latitude)} {_num(t.longitude)}"
                  for t in inst.targets]
    lines.append("# task id kind ws we roll mem reward")
    lines += [f"task {t.id} {t.kind} {t.window_start} {t.window_end} "
              f"{_num(t.roll_angle)} {t.memory_delta} {t.reward}" for t in inst.tasks]
    return "\n".join(lines) + "\n"


def parse_targets(text: str) -> list[Target]:
    """Read a target file: ``id reward lat lon`` per line, ``#`` comments."""
    targets = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        try:
            _expect(fields, 4, "target")
            targets.append(Target(int(fields[0]), int(fields[1]),
                                  float(fields[2]), float(fields[3])))
        except ValueError as exc:
            raise InstanceError(str(exc), lineno) from None
    return targets


def bundled_targets() -> list[Target]:
    """The bundled 50-target reward/position table."""
    text = resources.files("eosched.data").joinpath("paper50_targets.txt").read_text()
    return parse_targets(text)


def load_bundled_instance() -> Instance:
    """The bundled 50-target instance with generated windows."""
    text = resources.files("eosched.data").joinpath("paper50.txt").read_text()
    return parse_instance(text)


REFERENCE_EPOCH = datetime(2019, 12, 30, 15, 0, 0, tzinfo=timezone.utc)

REFERENCE_ORBIT = OrbitElements(6800.0, 0.01, 55.0, 90.0, 90.0, 0.0, REFERENCE_EPOCH)
