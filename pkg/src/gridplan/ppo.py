"""PPO actor-critic baseline trained with an easy-to-difficult curriculum.

Two 3-layer fully connected networks (actor: 8-way categorical, critic:
scalar value) written directly in numpy with hand-derived backprop, so the
gradients can be checked against finite differences. Training randomizes
each episode's start cell inside a radius around the goal that grows
linearly over the first 60% of episodes, then covers the whole map.

Rewards: -0.01 per step, an extra -0.2 for a collision attempt (the agent
stays put), +1.0 for reaching the goal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import MOVES, Cell, GridMap, chebyshev
from .search import SearchOutcome

STEP_PENALTY = -0.01
COLLISION_PENALTY = -0.2
GOAL_REWARD = 1.0
PATCH = 5  # obs window is PATCH x PATCH centered on the agent
OBS_DIM = 4 + PATCH * PATCH


class NonFiniteGradient(RuntimeError):
    pass


class RolloutDiverged(RuntimeError):
    pass


@dataclass
class PpoConfig:
    episodes: int = 2000
    max_steps: int = 200
    actor_lr: float = 0.0003
    critic_lr: float = 0.0003
    clip_epsilon: float = 0.2
    gamma: float = 0.99
    hidden_sizes: tuple[int, int] = (64, 64)
    minibatch: int = 64
    epochs_per_update: int = 4

    def __post_init__(self) -> None:
        if not (self.actor_lr < 0.0005 and self.critic_lr < 0.0005):
            raise ValueError("actor and critic learning rates must stay below 0.0005")
        if not 0.0 < self.clip_epsilon < 1.0:
            raise ValueError("clip_epsilon must lie in (0, 1)")


@dataclass
class Trajectory:
    observations: np.ndarray  # (T, OBS_DIM)
    actions: np.ndarray       # (T,) int
    rewards: np.ndarray       # (T,) float
    done: bool

    @property
    def episode_return(self) -> float:
        return float(self.rewards.sum())


def observe(grid: GridMap, agent: Cell, goal: Cell) -> np.ndarray:
    """Fixed-length observation: normalized agent/goal coordinates plus the
    5x5 occupancy patch around the agent (out-of-bounds counts as obstacle)."""
    out = np.empty(OBS_DIM)
    out[0] = agent.x / grid.width
    out[1] = agent.y / grid.height
    out[2] = goal.x / grid.width
    out[3] = goal.y / grid.height
    r = PATCH // 2
    i = 4
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            cell = Cell(agent.x + dx, agent.y + dy)
            out[i] = 0.0 if grid.in_bounds(cell) and grid.is_free(cell) else 1.0
            i += 1
    return out


def legal_move(grid: GridMap, agent: Cell, action: int) -> Cell | None:
    """Destination of `action` from `agent`, or None when it would collide."""
    move = MOVES[action]
    t = Cell(agent.x + move.dx, agent.y + move.dy)
    if not grid.in_bounds(t) or not grid.is_free(t):
        return None
    if move.step_cost == 2:
        if not (grid.is_free(Cell(agent.x + move.dx, agent.y)) and
                grid.is_free(Cell(agent.x, agent.y + move.dy))):
            return None
    return t


def curriculum_start(episode: int, config: PpoConfig, grid: GridMap,
                     rng: np.random.Generator) -> Cell:
    """Uniform free start cell within the growing Chebyshev radius of the
    goal: radius 1 at episode 0, the full map after 60% of episodes."""
    max_dim = max(grid.width, grid.height)
    ramp = max(1, int(0.6 * config.episodes))
    frac = min(1.0, episode / ramp)
    radius = 1 + int(frac * (max_dim - 1))
    candidates = [
        c for c in grid.free_cells()
        if c != grid.goal and chebyshev(c, grid.goal) <= radius
    ]
    return candidates[int(rng.integers(len(candidates)))]


# -- networks -------------------------------------------------------------


class Mlp:
    """3-layer fully connected net: in -> h1 -> h2 -> out, ReLU hidden."""

    def __init__(self, sizes: tuple[int, int, int, int], rng: np.random.Generator):
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            scale = np.sqrt(2.0 / fan_in)
            self.weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list]:
        """Returns output and the cache needed for backward()."""
        a = x
        cache = [a]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            a = np.maximum(z, 0.0) if i < len(self.weights) - 1 else z
            cache.append(a)
        return a, cache

    def backward(self, cache: list, dout: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
        """Gradients [(dW, db), ...] for dLoss/dOutput = dout."""
        grads: list[tuple[np.ndarray, np.ndarray]] = []
        delta = dout
        for i in reversed(range(len(self.weights))):
            a_in = cache[i]
            grads.append((a_in.T @ delta, delta.sum(axis=0)))
            if i > 0:
                delta = (delta @ self.weights[i].T) * (cache[i] > 0)
        grads.reverse()
        return grads

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params()])

    def load_flat(self, flat: np.ndarray) -> None:
        i = 0
        for p in self.params():
            p[...] = flat[i : i + p.size].reshape(p.shape)
            i += p.size


class Adam:
    def __init__(self, params: list[np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m[...] = self.beta1 * m + (1 - self.beta1) * g
            v[...] = self.beta2 * v + (1 - self.beta2) * g * g
            m_hat = m / (1 - self.beta1 ** self.t)
            v_hat = v / (1 - self.beta2 ** self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class Policy:
    """Actor-critic pair over the grid observation."""

    def __init__(self, grid_shape: tuple[int, int], config: PpoConfig,
                 rng: np.random.Generator):
        h1, h2 = config.hidden_sizes
        self.grid_shape = grid_shape
        self.hidden_sizes = (h1, h2)
        self.actor = Mlp((OBS_DIM, h1, h2, len(MOVES)), rng)
        self.critic = Mlp((OBS_DIM, h1, h2, 1), rng)

    def action_probs(self, obs: np.ndarray) -> np.ndarray:
        logits, _ = self.actor.forward(np.atleast_2d(obs))
        return softmax(logits)[0] if obs.ndim == 1 else softmax(logits)

    def value(self, obs: np.ndarray) -> np.ndarray:
        v, _ = self.critic.forward(np.atleast_2d(obs))
        return v[:, 0]


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


# -- losses with analytic gradients ----------------------------------------


def actor_loss_and_grads(
    policy: Policy,
    obs: np.ndarray,
    actions: np.ndarray,
    advantages: np.ndarray,
    old_logp: np.ndarray,
    clip_epsilon: float,
):
    """Clipped-surrogate loss, its parameter gradients, and diagnostics."""
    n = len(actions)
    logits, cache = policy.actor.forward(obs)
    logp_all = log_softmax(logits)
    logp = logp_all[np.arange(n), actions]
    ratio = np.exp(logp - old_logp)
    unclipped = ratio * advantages
    clipped = np.clip(ratio, 1 - clip_epsilon, 1 + clip_epsilon) * advantages
    loss = -np.mean(np.minimum(unclipped, clipped))

    # gradient flows only where the unclipped branch is active
    active = (unclipped <= clipped).astype(float)
    dlogp = -(advantages * ratio * active) / n
    probs = softmax(logits)
    dlogits = probs * (-dlogp)[:, None]
    dlogits[np.arange(n), actions] += dlogp
    grads = policy.actor.backward(cache, dlogits)
    clip_fraction = float(np.mean(np.abs(ratio - 1.0) > clip_epsilon))
    return loss, [g for pair in grads for g in pair], clip_fraction


def critic_loss_and_grads(policy: Policy, obs: np.ndarray, returns: np.ndarray):
    """Half mean squared return error and its parameter gradients."""
    n = len(returns)
    values, cache = policy.critic.forward(obs)
    err = values[:, 0] - returns
    loss = 0.5 * np.mean(err ** 2)
    dv = (err / n)[:, None]
    grads = policy.critic.backward(cache, dv)
    return loss, [g for pair in grads for g in pair]


def discounted_returns(rewards: np.ndarray, gamma: float) -> np.ndarray:
    out = np.empty_like(rewards)
    acc = 0.0
    for i in range(len(rewards) - 1, -1, -1):
        acc = rewards[i] + gamma * acc
        out[i] = acc
    return out


@dataclass
class UpdateDiagnostics:
    actor_loss: float
    critic_loss: float
    clip_fraction: float
    aborted: bool = False


def ppo_update(
    policy: Policy,
    trajectories: list[Trajectory],
    config: PpoConfig,
    rng: np.random.Generator,
    actor_opt: Adam,
    critic_opt: Adam,
) -> UpdateDiagnostics:
    """One clipped-surrogate update over the collected batch.

    Non-finite gradients abort the whole update and keep the old
    parameters (NonFiniteGradient is reported in the diagnostics rather
    than raised so training can continue past a bad batch).
    """
    obs = np.concatenate([t.observations for t in trajectories])
    actions = np.concatenate([t.actions for t in trajectories])
    returns = np.concatenate(
        [discounted_returns(t.rewards, config.gamma) for t in trajectories]
    )
    old_values = policy.value(obs)
    advantages = returns - old_values
    old_logits, _ = policy.actor.forward(obs)
    old_logp = log_softmax(old_logits)[np.arange(len(actions)), actions]

    actor_backup = policy.actor.flat()
    critic_backup = policy.critic.flat()
    last = UpdateDiagnostics(0.0, 0.0, 0.0)
    n = len(actions)
    for _ in range(config.epochs_per_update):
        order = rng.permutation(n)
        for lo in range(0, n, config.minibatch):
            idx = order[lo : lo + config.minibatch]
            a_loss, a_grads, clip_frac = actor_loss_and_grads(
                policy, obs[idx], actions[idx], advantages[idx],
                old_logp[idx], config.clip_epsilon,
            )
            c_loss, c_grads = critic_loss_and_grads(policy, obs[idx], returns[idx])
            if not all(np.isfinite(g).all() for g in a_grads + c_grads):
                policy.actor.load_flat(actor_backup)
                policy.critic.load_flat(critic_backup)
                return UpdateDiagnostics(a_loss, c_loss, clip_frac, aborted=True)
            actor_opt.step(a_grads)
            critic_opt.step(c_grads)
            last = UpdateDiagnostics(a_loss, c_loss, clip_frac)
    return last


@dataclass
class LearningCurves:
    steps: list[int] = field(default_factory=list)
    scores: list[float] = field(default_factory=list)
    reached: list[bool] = field(default_factory=list)

    def to_csv(self) -> str:
        lines = ["episode,steps,score"]
        for i, (s, r) in enumerate(zip(self.steps, self.scores)):
            lines.append(f"{i},{s},{r:.4f}")
        return "\n".join(lines) + "\n"


def run_episode(
    grid: GridMap,
    policy: Policy,
    start: Cell,
    config: PpoConfig,
    rng: np.random.Generator,
) -> Trajectory:
    agent = start
    obs_list, act_list, rew_list = [], [], []
    done = False
    for _ in range(config.max_steps):
        obs = observe(grid, agent, grid.goal)
        probs = policy.action_probs(obs)
        action = int(rng.choice(len(MOVES), p=probs))
        dest = legal_move(grid, agent, action)
        reward = STEP_PENALTY
        if dest is None:
            reward += COLLISION_PENALTY
        else:
            agent = dest
            if agent == grid.goal:
                reward += GOAL_REWARD
                done = True
        obs_list.append(obs)
        act_list.append(action)
        rew_list.append(reward)
        if done:
            break
    return Trajectory(
        observations=np.array(obs_list),
        actions=np.array(act_list, dtype=int),
        rewards=np.array(rew_list),
        done=done,
    )


def train(
    grid: GridMap,
    config: PpoConfig | None = None,
    seed: int = 0,
    progress: bool = False,
) -> tuple[Policy, LearningCurves]:
    """Full training run; returns the policy and per-episode curves."""
    config = config or PpoConfig()
    rng = np.random.default_rng(seed)
    policy = Policy((grid.width, grid.height), config, rng)
    actor_opt = Adam(policy.actor.params(), config.actor_lr)
    critic_opt = Adam(policy.critic.params(), config.critic_lr)
    curves = LearningCurves()
    for episode in range(config.episodes):
        start = curriculum_start(episode, config, grid, rng)
        traj = run_episode(grid, policy, start, config, rng)
        ppo_update(policy, [traj], config, rng, actor_opt, critic_opt)
        curves.steps.append(len(traj.actions))
        curves.scores.append(traj.episode_return)
        curves.reached.append(traj.done)
        if progress and (episode + 1) % 100 == 0:
            tail = curves.scores[-100:]
            print(
                f"episode {episode + 1}/{config.episodes} "
                f"mean score {np.mean(tail):.3f}"
            )
    return policy, curves


def rollout_path(policy: Policy, grid: GridMap, max_steps: int = 800) -> SearchOutcome:
    """Deterministic argmax rollout from the map's start.

    Illegal argmax choices fall back to the best legal action (ties break
    toward the lower action index). Raises RolloutDiverged when the goal
    is not reached within the step budget or the agent is boxed in.
    """
    agent = grid.start
    path = [agent]
    visited = {agent}
    for _ in range(max_steps):
        probs = policy.action_probs(observe(grid, agent, grid.goal))
        ranked = sorted(range(len(MOVES)), key=lambda a: (-probs[a], a))
        dest = None
        for action in ranked:
            dest = legal_move(grid, agent, action)
            if dest is not None:
                break
        if dest is None:
            raise RolloutDiverged("agent is boxed in")
        agent = dest
        path.append(agent)
        visited.add(agent)
        if agent == grid.goal:
            return SearchOutcome(
                path=path,
                path_cost=sum(
                    abs(a.x - b.x) + abs(a.y - b.y) for a, b in zip(path, path[1:])
                ),
                open_final=set(),
                closed_final=set(visited),
                deferred_final=set(),
                expansions=list(path),
                jump_points=[],
                verdict_log=[],
            )
    raise RolloutDiverged(f"goal not reached within {max_steps} steps")


# -- checkpoints ------------------------------------------------------------


def save_policy(policy: Policy, path: str | Path) -> None:
    def dump(net: Mlp) -> list[dict]:
        out = []
        for w, b in zip(net.weights, net.biases):
            out.append({"shape": list(w.shape), "w": w.ravel().tolist(),
                        "b": b.tolist()})
        return out

    blob = {
        "version": 1,
        "grid_shape": list(policy.grid_shape),
        "hidden_sizes": list(policy.hidden_sizes),
        "actor": dump(policy.actor),
        "critic": dump(policy.critic),
    }
    Path(path).write_text(json.dumps(blob))


def load_policy(path: str | Path) -> Policy:
    blob = json.loads(Path(path).read_text())
    if blob.get("version") != 1:
        raise ValueError(f"unsupported checkpoint version {blob.get('version')!r}")
    h1, h2 = blob["hidden_sizes"]
    config = PpoConfig(hidden_sizes=(h1, h2))
    policy = Policy(tuple(blob["grid_shape"]), config, np.random.default_rng(0))

    def load(net: Mlp, layers: list[dict]) -> None:
        for i, layer in enumerate(layers):
            net.weights[i] = np.array(layer["w"]).reshape(layer["shape"])
            net.biases[i] = np.array(layer["b"])

    load(policy.actor, blob["actor"])
    load(policy.critic, blob["critic"])
    return policy
