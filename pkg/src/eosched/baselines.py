"""Reference schedulers: FCFS, greedy by reward, random policy and exact search."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import environment as env
from .instance_model import Instance


@dataclass
class BaselineResult:
    method: str
    decisions: list[int]
    reward: int
    steps: int

    @property
    def accepted_indices(self) -> list[int]:
        return [i for i, d in enumerate(self.decisions) if d]


def _screened_rollout(inst: Instance, choose) -> tuple[env.SchedState, int]:
    state = env.reset(inst)
    steps = 0
    while not state.done:
        state, _, _ = env.step(state, choose(state), inst)
        steps += 1
    return state, steps


def fcfs(inst: Instance) -> BaselineResult:
    """Accept every task that survives screening, in window-start order."""
    state, steps = _screened_rollout(inst, lambda s: 1)
    return BaselineResult("fcfs", list(state.decisions), state.cumulative_reward, steps)


def random_policy(inst: Instance, seed: int = 0, p_accept: float = 0.5) -> BaselineResult:
    rng = np.random.default_rng(seed)
    state, steps = _screened_rollout(inst, lambda s: int(rng.random() < p_accept))
    return BaselineResult("random", list(state.decisions), state.cumulative_reward, steps)


def greedy_reward(inst: Instance) -> BaselineResult:
    """Highest reward first (ties by id); keep a task if the enlarged set still validates."""
    decisions = [0] * inst.n_tasks
    order = sorted(range(inst.n_tasks), key=lambda i: (-inst.tasks[i].reward, inst.tasks[i].id))
    checks = 0
    for i in order:
        decisions[i] = 1
        checks += 1
        if not env.validate_schedule(inst, decisions).valid:
            decisions[i] = 0
    reward = sum(t.reward for t, d in zip(inst.tasks, decisions) if d)
    return BaselineResult("greedy", decisions, reward, checks)


class InstanceTooLarge(ValueError):
    pass


def exact(inst: Instance, prune: bool = True, max_tasks: int = 22) -> BaselineResult:
    """Depth-first branch and bound over screened accept/reject decisions.

    Accept is explored before reject. The bound is the current reward plus
    every remaining task's reward; a subtree is cut only when that bound is
    strictly below the incumbent, so among optimal schedules the
    lexicographically smallest decision vector is returned whether or not
    pruning is enabled.
    """
    if inst.n_tasks > max_tasks:
        raise InstanceTooLarge(f"{inst.n_tasks} tasks exceeds the exact-search limit of {max_tasks}")
    suffix = [0] * (inst.n_tasks + 1)
    for i in range(inst.n_tasks - 1, -1, -1):
        suffix[i] = suffix[i + 1] + inst.tasks[i].reward

    best_reward = -1
    best_vec: tuple[int, ...] = ()
    nodes = 0

    def visit(state: env.SchedState) -> None:
        nonlocal best_reward, best_vec, nodes
        nodes += 1
        if state.done:
            vec = state.decisions
            if state.cumulative_reward > best_reward or (
                    state.cumulative_reward == best_reward and vec < best_vec):
                best_reward, best_vec = state.cumulative_reward, vec
            return
        if prune and state.cumulative_reward + suffix[state.next_task_index] < best_reward:
            return
        for action in (1, 0):
            nxt, _, _ = env.step(state, action, inst)
            visit(nxt)

    visit(env.reset(inst))
    return BaselineResult("exact" if prune else "exact-noprune", list(best_vec), best_reward, nodes)


METHODS = {
    "fcfs": fcfs,
    "greedy": greedy_reward,
    "random": random_policy,
    "exact": exact,
}
