"""Compare the hand-written backward pass with central finite differences."""

import numpy as np

from eosched import ppo_engine as ppo

rng = np.random.default_rng(0)
actor = ppo.init_mlp([4, 4, 4, 2], rng)
old = ppo.init_mlp([4, 4, 4, 2], rng)
X = rng.uniform(-1, 1, size=(6, 4))
actions = rng.integers(0, 2, size=6)
adv = rng.normal(size=6)

J, grad = ppo.ppo_objective(actor, old, X, actions, adv, kl_weight=0.5)
analytic = grad.flat()

h = 1e-5
numeric = np.zeros_like(analytic)
arrays = [a for pair in zip(actor.weights, actor.biases) for a in pair]  # same order as flat()
k = 0
for arr in arrays:
    for idx in np.ndindex(arr.shape):
        orig = arr[idx]
        arr[idx] = orig + h
        jp = ppo.ppo_objective(actor, old, X, actions, adv, 0.5, with_grad=False)
        arr[idx] = orig - h
        jm = ppo.ppo_objective(actor, old, X, actions, adv, 0.5, with_grad=False)
        arr[idx] = orig
        numeric[k] = (jp - jm) / (2 * h)
        k += 1

err = np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric)
print(f"objective {J:.6f}, {analytic.size} parameters, relative error {err:.2e}")
