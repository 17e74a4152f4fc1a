"""Step through the scheduling environment by hand.

Conflicting tasks never reach the agent: after each decision the environment
skips ahead to the next task that can still be accepted.
"""

from eosched.environment import features, reset, step, validate_schedule
from eosched.instance_model import load_bundled_instance

inst = load_bundled_instance()
state = reset(inst)

# accept the first eight presented tasks, reject the rest
k = 0
while not state.done:
    task = inst.tasks[state.next_task_index]
    action = 1 if k < 8 else 0
    f = features(state, inst)
    state, reward, done = step(state, action, inst)
    if action:
        print(f"accept {task.id:5d}  reward {reward}  features {f.round(3)}")
    k += 1

print(f"\naccepted {state.accepted_ids}")
print(f"storage used {state.storage_used}, cumulative reward {state.cumulative_reward}")

# the validator rebuilds the timeline on its own and agrees
print(validate_schedule(inst, state.decisions).summary_line())
