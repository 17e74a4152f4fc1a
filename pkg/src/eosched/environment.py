"""Deterministic accept/reject scheduling environment and schedule validator.

Tasks are presented in window-start order. Before a task reaches the agent it
is screened against the current state; conflicting tasks are skipped
automatically, so every accept the agent issues is feasible.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .geometry import ManeuverProfile, maneuver_time
from .instance_model import Instance, TaskSpec

INITIAL_ROLL = 0.0


class ConflictReason(enum.Enum):
    WINDOW_GONE = "window_gone"
    MANEUVER_INFEASIBLE = "maneuver_infeasible"
    STORAGE_OVERFLOW = "storage_overflow"


class TerminalStateError(RuntimeError):
    pass


@dataclass(frozen=True)
class Accepted:
    task_id: int
    start: int
    end: int
    roll: float


@dataclass(frozen=True)
class SchedState:
    n_tasks: int
    storage_used: int = 0
    next_task_index: int = 0
    remaining_windows: tuple[tuple[int, int], ...] = ()
    current_roll: float = INITIAL_ROLL
    accepted: tuple[Accepted, ...] = ()
    cumulative_reward: int = 0
    decisions: tuple[int, ...] = field(default=())

    @property
    def done(self) -> bool:
        return self.next_task_index >= self.n_tasks

    @property
    def accepted_ids(self) -> list[int]:
        return [a.task_id for a in self.accepted]

    def remaining_measure(self) -> int:
        return sum(e - s for s, e in self.remaining_windows)


def _fits(windows: Sequence[tuple[int, int]], start: int, end: int) -> bool:
    return any(ws <= start and end <= we for ws, we in windows)


def _subtract(windows: Sequence[tuple[int, int]], start: int, end: int) -> tuple[tuple[int, int], ...]:
    out = []
    for ws, we in windows:
        if end <= ws or we <= start:
            out.append((ws, we))
            continue
        if ws < start:
            out.append((ws, start))
        if end < we:
            out.append((end, we))
    return tuple(out)


def conflict(state: SchedState, task: TaskSpec, inst: Instance) -> ConflictReason | None:
    """First violated constraint family if ``task`` were accepted, else None."""
    if not _fits(state.remaining_windows, task.window_start, task.window_end):
        return ConflictReason.WINDOW_GONE

    profile = ManeuverProfile.from_satellite(inst.satellite)
    prev_end, prev_roll = inst.horizon[0], INITIAL_ROLL
    nxt = None
    for acc in state.accepted:
        if acc.end <= task.window_start and acc.end >= prev_end:
            prev_end, prev_roll = acc.end, acc.roll
        elif acc.start >= task.window_end and (nxt is None or acc.start < nxt.start):
            nxt = acc
    if task.window_start - prev_end < maneuver_time(prev_roll, task.roll_angle, profile):
        return ConflictReason.MANEUVER_INFEASIBLE
    if nxt is not None and nxt.start - task.window_end < maneuver_time(task.roll_angle, nxt.roll, profile):
        return ConflictReason.MANEUVER_INFEASIBLE

    level = state.storage_used + task.memory_delta
    if not 0 <= level <= inst.satellite.max_storage:
        return ConflictReason.STORAGE_OVERFLOW
    return None


def screen(state: SchedState, inst: Instance) -> SchedState:
    """Skip (decide 0 for) every conflicting task until a feasible one or the end."""
    idx = state.next_task_index
    decisions = list(state.decisions)
    while idx < inst.n_tasks and conflict(state, inst.tasks[idx], inst) is not None:
        decisions.append(0)
        idx += 1
    if idx == state.next_task_index:
        return state
    return replace(state, next_task_index=idx, decisions=tuple(decisions))


def reset(inst: Instance) -> SchedState:
    state = SchedState(n_tasks=inst.n_tasks, remaining_windows=(tuple(inst.horizon),))
    return screen(state, inst)


def step(state: SchedState, action: int, inst: Instance) -> tuple[SchedState, int, bool]:
    """Apply accept (1) or reject (0) to the presented task, then screen ahead."""
    if state.done:
        raise TerminalStateError("step called on a terminal state")
    if action not in (0, 1):
        raise ValueError(f"action must be 0 or 1, got {action!r}")
    task = inst.tasks[state.next_task_index]
    reward = 0
    if action == 1:
        reason = conflict(state, task, inst)
        if reason is not None:
            raise RuntimeError(f"task {task.id} presented despite conflict {reason.value}")
        acc = Accepted(task.id, task.window_start, task.window_end, task.roll_angle)
        reward = task.reward
        state = replace(
            state,
            storage_used=state.storage_used + task.memory_delta,
            remaining_windows=_subtract(state.remaining_windows, task.window_start, task.window_end),
            current_roll=task.roll_angle,
            accepted=state.accepted + (acc,),
            cumulative_reward=state.cumulative_reward + reward,
        )
    state = replace(state, next_task_index=state.next_task_index + 1,
                    decisions=state.decisions + (action,))
    state = screen(state, inst)
    return state, reward, state.done


def features(state: SchedState, inst: Instance) -> np.ndarray:
    """Network input: normalised storage, task index, remaining window measure, roll."""
    sat = inst.satellite
    n = inst.n_tasks
    return np.array([
        state.storage_used / sat.max_storage,
        state.next_task_index / n if n else 1.0,
        state.remaining_measure() / sat.ltw_scaling_factor,
        state.current_roll / sat.max_roll,
    ])


def replay(inst: Instance, actions: Sequence[int]) -> SchedState:
    """Run a recorded agent action sequence from reset."""
    state = reset(inst)
    for a in actions:
        state, _, _ = step(state, a, inst)
    return state


def replay_prefix(inst: Instance, decisions: Sequence[int], upto: int) -> SchedState:
    """State reached after applying a full decision vector up to task index ``upto``."""
    state = reset(inst)
    while not state.done and state.next_task_index < upto:
        state, _, _ = step(state, int(decisions[state.next_task_index]), inst)
    return state


# -- independent validator -----------------------------------------------------

@dataclass(frozen=True)
class Violation:
    constraint: str
    task_ids: tuple[int, ...]
    detail: str


@dataclass
class ValidationReport:
    valid: bool
    reward: int
    violations: list[Violation]
    order: list[int]

    @property
    def first_violation(self) -> Violation | None:
        return self.violations[0] if self.violations else None

    def summary_line(self) -> str:
        return (f"valid={'true' if self.valid else 'false'} reward={self.reward} "
                f"violations={len(self.violations)}")

    def render(self) -> str:
        lines = [f"schedule {'VALID' if self.valid else 'INVALID'}: "
                 f"{len(self.order)} tasks, reward {self.reward}"]
        lines.append("order: " + " ".join(map(str, self.order)))
        for v in self.violations:
            lines.append(f"violation {v.constraint} tasks={','.join(map(str, v.task_ids))}: {v.detail}")
        lines.append(self.summary_line())
        return "\n".join(lines)


TIME_WINDOW = "time_window_overlap"
MANEUVER = "maneuver_gap"
ROLL_LIMIT = "roll_limit"
STORAGE = "storage_capacity"
HORIZON = "horizon"


def validate_schedule(inst: Instance, decisions: Sequence[int]) -> ValidationReport:
    """Check a full decision vector against every constraint family.

    Rebuilds the execution timeline from the accepted windows and checks
    non-overlap, slew gaps between consecutive tasks (starting from nadir at
    the horizon start), the roll limit and every storage prefix sum.
    """
    if len(decisions) != inst.n_tasks:
        raise ValueError(f"decision vector has {len(decisions)} entries, instance has {inst.n_tasks} tasks")
    sat = inst.satellite
    chosen = [t for t, d in zip(inst.tasks, decisions) if d]
    if any(d not in (0, 1) for d in decisions):
        raise ValueError("decisions must be 0/1")
    timeline = sorted(chosen, key=lambda t: (t.window_start, t.window_end, t.id))
    violations = []

    for t in timeline:
        if abs(t.roll_angle) > sat.max_roll:
            violations.append(Violation(ROLL_LIMIT, (t.id,),
                                        f"|{t.roll_angle}| > {sat.max_roll}"))
        if t.window_start < inst.horizon[0] or t.window_end > inst.horizon[1]:
            violations.append(Violation(HORIZON, (t.id,), "window outside horizon"))

    rate, accel = sat.max_roll_rate, sat.roll_accel
    prev_end, prev_roll, prev_id = inst.horizon[0], INITIAL_ROLL, None
    for t in timeline:
        if prev_id is not None and t.window_start < prev_end:
            violations.append(Violation(TIME_WINDOW, (prev_id, t.id),
                                        f"starts at {t.window_start} before {prev_end}"))
        else:
            # closed-form slew time, written out independently of the environment
            delta = abs(t.roll_angle - prev_roll)
            if delta == 0:
                need = 0.0
            elif delta * accel >= rate * rate:
                need = delta / rate + rate / accel
            else:
                need = 2.0 * (delta / accel) ** 0.5
            gap = t.window_start - prev_end
            if gap < need:
                who = (t.id,) if prev_id is None else (prev_id, t.id)
                violations.append(Violation(MANEUVER, who, f"gap {gap}s < slew {need:.3f}s"))
        if t.window_end > prev_end or prev_id is None:
            prev_end, prev_roll = t.window_end, t.roll_angle
        prev_id = t.id

    level = 0
    for t in timeline:
        level += t.memory_delta
        if level < 0 or level > sat.max_storage:
            violations.append(Violation(STORAGE, (t.id,),
                                        f"storage {level} outside [0, {sat.max_storage}]"))

    reward = sum(t.reward for t in chosen)
    return ValidationReport(not violations, reward, violations, [t.id for t in timeline])


# -- decision vector files -------------------------------------------------------

def format_decisions(inst: Instance, decisions: Sequence[int]) -> str:
    bits = "".join("1" if d else "0" for d in decisions)
    ids = [t.id for t, d in zip(inst.tasks, decisions) if d]
    return f"{bits}\naccepted: {' '.join(map(str, ids))}\n"


def parse_decisions(text: str, inst: Instance) -> list[int]:
    """Read a schedule file: a 0/1 line, an ``accepted:`` id line, or both (must agree)."""
    bits = None
    ids = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("accepted:"):
            ids = [int(x) for x in line[len("accepted:"):].replace(",", " ").split()]
        elif set(line) <= {"0", "1"}:
            bits = [int(c) for c in line]
        else:
            raise ValueError(f"unrecognised schedule line {line!r}")
    from_ids = None
    if ids is not None:
        index = {t.id: i for i, t in enumerate(inst.tasks)}
        from_ids = [0] * inst.n_tasks
        for i in ids:
            if i not in index:
                raise ValueError(f"schedule names unknown task id {i}")
            from_ids[index[i]] = 1
    if bits is None and from_ids is None:
        raise ValueError("empty schedule file")
    if bits is not None and len(bits) != inst.n_tasks:
        raise ValueError(f"decision line has {len(bits)} entries, instance has {inst.n_tasks} tasks")
    if bits is not None and from_ids is not None and bits != from_ids:
        raise ValueError("decision line and accepted list disagree")
    return bits if bits is not None else from_ids
