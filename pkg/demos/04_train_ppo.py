"""Search for a schedule with PPO and compare it against first-come-first-serve.

Each training episode produces a complete schedule; the best one seen is
kept as the answer.
"""

from eosched.baselines import fcfs
from eosched.environment import validate_schedule
from eosched.instance_model import load_bundled_instance
from eosched.ppo_engine import TrainConfig, train

inst = load_bundled_instance()
base = fcfs(inst).reward

res = train(inst, TrainConfig(episodes=80, seed=0))
curve = res.reward_curve
print("episode returns, every tenth:", curve[::10])
print(f"best {res.best_reward} at episode {res.best_episode + 1}; fcfs {base}")
print("accepted:", res.best_accepted)
print(validate_schedule(inst, res.best_decisions).summary_line())

# the same seed reproduces the same search
again = train(inst, TrainConfig(episodes=80, seed=0))
print("reproducible:", again.best_decisions == res.best_decisions)
