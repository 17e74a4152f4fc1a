"""KL-penalised PPO written directly in numpy, used as a schedule search.

Actor and critic are small ReLU MLPs with hand-written backpropagation. One
episode is collected per iteration; the best-rewarded episode seen during
training is the returned schedule.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import environment as env
from .instance_model import Instance

PROB_FLOOR = 1e-8
N_FEATURES = 4


class TrainingDivergence(FloatingPointError):
    """Raised when a gradient or loss becomes non-finite."""


@dataclass
class MlpParams:
    """Weights ``W[l]`` of shape (fan_in, fan_out) and biases ``b[l]``."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for pair in zip(self.weights, self.biases) for a in pair])

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.weights + self.biases)


def init_mlp(sizes: Sequence[int], rng: np.random.Generator) -> MlpParams:
    """Glorot-uniform weights, zero biases."""
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights, biases)


def zeros_mlp(sizes: Sequence[int]) -> MlpParams:
    return MlpParams([np.zeros((a, b)) for a, b in zip(sizes[:-1], sizes[1:])],
                     [np.zeros(b) for b in sizes[1:]])


def _forward(params: MlpParams, X: np.ndarray):
    acts = [X]
    pre = []
    h = X
    last = len(params.weights) - 1
    for l, (W, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ W + b
        pre.append(z)
        h = z if l == last else np.maximum(z, 0.0)
        acts.append(h)
    return h, (acts, pre)


def _backward(params: MlpParams, cache, dout: np.ndarray) -> MlpParams:
    acts, pre = cache
    gW = [None] * len(params.weights)
    gb = [None] * len(params.weights)
    delta = dout
    # overflow is caught by the finiteness checks in the update loops
    with np.errstate(over="ignore", invalid="ignore"):
        for l in range(len(params.weights) - 1, -1, -1):
            gW[l] = acts[l].T @ delta
            gb[l] = delta.sum(axis=0)
            if l > 0:
                delta = (delta @ params.weights[l].T) * (pre[l - 1] > 0.0)
    return MlpParams(gW, gb)


def softmax(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _check_finite(params: MlpParams, what: str) -> None:
    if not params.is_finite():
        raise TrainingDivergence(f"non-finite {what} parameters")


def actor_probs(params: MlpParams, X: np.ndarray) -> np.ndarray:
    """Rowwise (p_reject, p_accept) for a batch of feature vectors."""
    logits, _ = _forward(params, np.atleast_2d(X))
    return softmax(logits)


def forward_actor(params: MlpParams, x: np.ndarray) -> tuple[float, float]:
    _check_finite(params, "actor")
    p = actor_probs(params, np.asarray(x, dtype=float))[0]
    return float(p[0]), float(p[1])


def forward_critic(params: MlpParams, x: np.ndarray) -> float:
    _check_finite(params, "critic")
    v, _ = _forward(params, np.atleast_2d(np.asarray(x, dtype=float)))
    return float(v[0, 0])


def critic_values(params: MlpParams, X: np.ndarray) -> np.ndarray:
    v, _ = _forward(params, np.atleast_2d(X))
    return v[:, 0]


def kl_categorical(p: Sequence[float], q: Sequence[float]) -> float:
    """KL(p || q) = sum p ln(p/q); terms with p = 0 contribute nothing."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any(q[p > 0] <= 0.0):
        raise ValueError("q must be strictly positive where p is positive")
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


# -- trajectories ----------------------------------------------------------------

@dataclass
class Trajectory:
    features: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    old_probs: np.ndarray
    decisions: list[int]
    accepted_ids: list[int]
    terminal: bool = True

    @property
    def episode_return(self) -> int:
        return int(self.rewards.sum())

    def __len__(self) -> int:
        return len(self.actions)


def rollout(inst: Instance, actor: MlpParams, rng: np.random.Generator,
            greedy: bool = False) -> Trajectory:
    """Play one screened episode, sampling accept/reject from the actor."""
    state = env.reset(inst)
    feats, actions, rewards, probs = [], [], [], []
    while not state.done:
        x = env.features(state, inst)
        p = forward_actor(actor, x)
        if greedy:
            a = int(p[1] > p[0])
        else:
            a = int(rng.random() < p[1])
        state, r, _ = env.step(state, a, inst)
        feats.append(x)
        actions.append(a)
        rewards.append(r)
        probs.append(p[a])
    return Trajectory(
        features=np.array(feats, dtype=float).reshape(-1, N_FEATURES),
        actions=np.array(actions, dtype=int),
        rewards=np.array(rewards, dtype=float),
        old_probs=np.array(probs, dtype=float),
        decisions=list(state.decisions),
        accepted_ids=state.accepted_ids,
    )


def returns_to_go(rewards: Sequence[float], gamma: float, include_current: bool = False) -> np.ndarray:
    """Discounted sum of rewards after each step.

    By default the reward of the step itself is excluded
    (``sum_{t' > t} gamma^(t'-t) r_t'``); ``include_current`` gives the usual
    ``sum_{t' >= t}`` form.
    """
    rewards = np.asarray(rewards, dtype=float)
    out = np.zeros_like(rewards)
    acc = 0.0  # sum_{t' >= t+1} gamma^(t'-t-1) r_t'
    for t in range(len(rewards) - 1, -1, -1):
        out[t] = rewards[t] + gamma * acc if include_current else gamma * acc
        acc = rewards[t] + gamma * acc
    return out


def advantages(traj: Trajectory, critic: MlpParams, gamma: float,
               include_current: bool = False) -> np.ndarray:
    if len(traj) == 0:
        return np.zeros(0)
    return returns_to_go(traj.rewards, gamma, include_current) - critic_values(critic, traj.features)


# -- objectives and gradients ------------------------------------------------------

def ppo_objective(actor: MlpParams, old_actor: MlpParams, X: np.ndarray, actions: np.ndarray,
                  advs: np.ndarray, kl_weight: float, with_grad: bool = True):
    """``J = sum_t ratio_t * A_t - kl_weight * sum_t KL(pi_old(s_t) || pi(s_t))`` and dJ/dtheta."""
    logits, cache = _forward(actor, X)
    p = softmax(logits)
    q = actor_probs(old_actor, X)
    T = len(actions)
    rows = np.arange(T)
    q_taken = np.maximum(q[rows, actions], PROB_FLOOR)
    ratio = p[rows, actions] / q_taken
    p_safe = np.maximum(p, PROB_FLOOR)
    q_safe = np.maximum(q, PROB_FLOOR)
    kl = np.sum(np.where(q > 0, q * (np.log(q_safe) - np.log(p_safe)), 0.0))
    J = float(np.sum(ratio * advs) - kl_weight * kl)
    if not with_grad:
        return J
    g = np.zeros_like(p)
    g[rows, actions] = advs / q_taken
    g += kl_weight * np.where(p > PROB_FLOOR, q / p_safe, 0.0)
    dlogits = p * (g - np.sum(p * g, axis=1, keepdims=True))
    return J, _backward(actor, cache, dlogits)


def critic_loss(critic: MlpParams, X: np.ndarray, returns: np.ndarray, with_grad: bool = True):
    """Summed squared error between returns and value estimates, and its gradient."""
    v, cache = _forward(critic, X)
    err = returns - v[:, 0]
    with np.errstate(over="ignore"):
        L = float(np.sum(err ** 2))
    if not with_grad:
        return L
    return L, _backward(critic, cache, (-2.0 * err)[:, None])


class _Adam:
    def __init__(self, params: MlpParams, lr: float, betas=(0.9, 0.999), eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, betas[0], betas[1], eps
        self.m = [np.zeros_like(a) for a in params.weights + params.biases]
        self.v = [np.zeros_like(a) for a in params.weights + params.biases]
        self.t = 0

    def direction(self, grads: MlpParams) -> list[np.ndarray]:
        self.t += 1
        out = []
        for i, g in enumerate(grads.weights + grads.biases):
            self.m[i] = self.b1 * self.m[i] + (1 - self.b1) * g
            self.v[i] = self.b2 * self.v[i] + (1 - self.b2) * g * g
            mh = self.m[i] / (1 - self.b1 ** self.t)
            vh = self.v[i] / (1 - self.b2 ** self.t)
            out.append(self.lr * mh / (np.sqrt(vh) + self.eps))
        return out


def _apply(params: MlpParams, grads: MlpParams, sign: float, lr: float, opt: _Adam | None) -> MlpParams:
    flat = grads.weights + grads.biases
    for g in flat:
        if not np.all(np.isfinite(g)):
            raise TrainingDivergence("non-finite gradient")
    steps = opt.direction(grads) if opt is not None else [lr * g for g in flat]
    n = len(params.weights)
    new = params.copy()
    for i in range(n):
        new.weights[i] += sign * steps[i]
        new.biases[i] += sign * steps[n + i]
    return new


def _stack(trajs: Sequence[Trajectory], advs: Sequence[np.ndarray] | None = None):
    X = np.concatenate([t.features for t in trajs]) if trajs else np.zeros((0, N_FEATURES))
    A = np.concatenate([t.actions for t in trajs]) if trajs else np.zeros(0, dtype=int)
    if advs is None:
        return X, A
    return X, A, np.concatenate([np.asarray(a, dtype=float) for a in advs])


def actor_update(actor: MlpParams, old_actor: MlpParams, trajs: Sequence[Trajectory],
                 advs: Sequence[np.ndarray], kl_weight: float, epochs: int, lr: float,
                 optimizer: str = "sgd") -> MlpParams:
    """``epochs`` gradient-ascent steps on the KL-penalised surrogate. ``old_actor`` is not modified."""
    X, A, adv = _stack(trajs, advs)
    if len(A) == 0:
        return actor.copy()
    opt = _Adam(actor, lr) if optimizer == "adam" else None
    for _ in range(epochs):
        J, grads = ppo_objective(actor, old_actor, X, A, adv, kl_weight)
        if not math.isfinite(J):
            raise TrainingDivergence("non-finite actor objective")
        actor = _apply(actor, grads, +1.0, lr, opt)
    return actor


def critic_update(critic: MlpParams, trajs: Sequence[Trajectory], gamma: float, epochs: int,
                  lr: float, include_current: bool = False, optimizer: str = "sgd") -> MlpParams:
    """``epochs`` gradient-descent steps on the squared return error."""
    X, _ = _stack(trajs)
    if len(X) == 0:
        return critic.copy()
    G = np.concatenate([returns_to_go(t.rewards, gamma, include_current) for t in trajs])
    opt = _Adam(critic, lr) if optimizer == "adam" else None
    for _ in range(epochs):
        L, grads = critic_loss(critic, X, G)
        if not math.isfinite(L):
            raise TrainingDivergence("non-finite critic loss")
        critic = _apply(critic, grads, -1.0, lr, opt)
    return critic


# -- training loop ---------------------------------------------------------------

@dataclass
class TrainConfig:
    episodes: int = 80
    actor_epochs: int = 5
    critic_epochs: int = 5
    gamma: float = 0.99
    kl_weight: float = 0.5
    actor_lr: float = 3e-4
    critic_lr: float = 1e-3
    hidden: int = 64
    seed: int = 0
    include_current_reward: bool = True
    optimizer: str = "sgd"
    check_schedules: bool = False
    freeze: bool = False

    def __post_init__(self):
        for name in ("episodes", "actor_epochs", "critic_epochs", "hidden"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.kl_weight < 0:
            raise ValueError("kl_weight must be >= 0")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class TrainResult:
    best_decisions: list[int]
    best_reward: int
    best_episode: int
    reward_curve: list[int]
    actor: MlpParams
    critic: MlpParams
    best_accepted: list[int] = field(default_factory=list)


def train(inst: Instance, cfg: TrainConfig) -> TrainResult:
    """Run ``cfg.episodes`` PPO iterations; the best episode is the schedule."""
    rng = np.random.default_rng(cfg.seed)
    H = cfg.hidden
    actor = init_mlp([N_FEATURES, H, H, 2], rng)
    critic = init_mlp([N_FEATURES, H, H, 1], rng)
    curve: list[int] = []
    best: Trajectory | None = None
    best_ep = -1
    for ep in range(cfg.episodes):
        traj = rollout(inst, actor, rng)
        ret = traj.episode_return
        curve.append(ret)
        if cfg.check_schedules:
            report = env.validate_schedule(inst, traj.decisions)
            assert report.valid and report.reward == ret, report.render()
        if best is None or ret > best.episode_return:
            best, best_ep = traj, ep
        if cfg.freeze or len(traj) == 0:
            continue
        adv = advantages(traj, critic, cfg.gamma, cfg.include_current_reward)
        old_actor = actor.copy()
        actor = actor_update(actor, old_actor, [traj], [adv], cfg.kl_weight,
                             cfg.actor_epochs, cfg.actor_lr, cfg.optimizer)
        critic = critic_update(critic, [traj], cfg.gamma, cfg.critic_epochs, cfg.critic_lr,
                               cfg.include_current_reward, cfg.optimizer)
    return TrainResult(best.decisions, best.episode_return, best_ep, curve, actor, critic,
                       best.accepted_ids)


# -- parameter files -------------------------------------------------------------

PARAMS_MAGIC = b"PPOW"
PARAMS_VERSION = 1
_HEADER = struct.Struct("<4sI4H")


def params_to_bytes(params: MlpParams) -> bytes:
    """16-byte header (magic, version, four layer sizes) then little-endian float64 W, b per layer."""
    sizes = params.sizes
    if len(sizes) != 4:
        raise ValueError("parameter files hold exactly three layers")
    body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes()
                    for pair in zip(params.weights, params.biases) for a in pair)
    return _HEADER.pack(PARAMS_MAGIC, PARAMS_VERSION, *sizes) + body


def params_from_bytes(data: bytes) -> MlpParams:
    magic, version, *sizes = _HEADER.unpack_from(data)
    if magic != PARAMS_MAGIC:
        raise ValueError("not a parameter file (bad magic)")
    if version != PARAMS_VERSION:
        raise ValueError(f"unsupported parameter file version {version}")
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    weights, biases = [], []
    pos = 0
    for a, b in zip(sizes[:-1], sizes[1:]):
        weights.append(values[pos:pos + a * b].reshape(a, b).copy())
        pos += a * b
        biases.append(values[pos:pos + b].copy())
        pos += b
    if pos != len(values):
        raise ValueError("parameter file length does not match its header")
    return MlpParams(weights, biases)
