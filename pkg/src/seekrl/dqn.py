"""Framework-free DQN: the 6-20-20-3 value network, replay, and training loop.

The network is small enough (623 parameters) that all math is explicit numpy.
The single-observation forward pass accumulates each output strictly in
ascending input-index order; the standalone inference kernel pins the same
order, which is what makes cross-kernel parity bit-exact instead of merely
approximate. Batched math used inside training has no such constraint and
goes through regular matrix products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import blob
from .env import Action, EpisodeConfig, Observation, Outcome, SourceSeekEnv, run_episode

LAYER_DIMS = blob.LAYER_DIMS
PARAM_COUNT = blob.PARAM_COUNT
TRAIN_STREAM_SALT = 0x7452414E


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class Mlp:
    """Two-hidden-layer perceptron; weights are (out, in), one row per unit."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "relu"

    def __post_init__(self) -> None:
        if self.activation not in ("relu", "tanh"):
            raise ValueError(f"unknown activation {self.activation!r}")
        shapes = tuple(w.shape for w in self.weights)
        expected = tuple((o, i) for i, o in LAYER_DIMS)
        if shapes != expected:
            raise ValueError(f"weight shapes {shapes} do not match {expected}")
        for (in_dim, out_dim), b in zip(LAYER_DIMS, self.biases):
            if b.shape != (out_dim,):
                raise ValueError(f"bias shape {b.shape} does not match ({out_dim},)")

    @property
    def dtype(self) -> np.dtype:
        return self.weights[0].dtype

    @property
    def param_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "Mlp":
        return Mlp(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            activation=self.activation,
        )

    def astype(self, dtype) -> "Mlp":
        return Mlp(
            weights=[w.astype(dtype) for w in self.weights],
            biases=[b.astype(dtype) for b in self.biases],
            activation=self.activation,
        )

    def copy_from(self, other: "Mlp") -> None:
        for dst, src in zip(self.weights + self.biases, other.weights + other.biases):
            np.copyto(dst, src)


def init_mlp(seed: int, activation: str = "relu", dtype=np.float32) -> Mlp:
    """He-style uniform init, U(-sqrt(6/fan_in), +sqrt(6/fan_in)), zero biases."""
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for in_dim, out_dim in LAYER_DIMS:
        bound = math.sqrt(6.0 / in_dim)
        weights.append(rng.uniform(-bound, bound, size=(out_dim, in_dim)).astype(dtype))
        biases.append(np.zeros(out_dim, dtype=dtype))
    return Mlp(weights=weights, biases=biases, activation=activation)


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(z, 0)
    return np.tanh(z)


def forward(net: Mlp, obs) -> np.ndarray:
    """Q-values for one observation, ascending input-index accumulation.

    The per-output sums are seeded with the bias and accumulate column by
    column, so the rounding sequence is identical to the scalar loops in the
    standalone kernel.
    """
    x = np.asarray(obs, dtype=np.float64)
    if x.shape != (6,):
        raise ValueError(f"observation must have 6 components, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("observation contains non-finite values")
    h = x.astype(net.dtype)
    last = len(net.weights) - 1
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        acc = b.copy()
        for j in range(w.shape[1]):
            acc += w[:, j] * h[j]
        h = _activate(acc, net.activation) if k < last else acc
    return h


def _forward_cached(net: Mlp, x: np.ndarray):
    """Batched forward returning activations for backprop. No order pinning."""
    z1 = x @ net.weights[0].T + net.biases[0]
    h1 = _activate(z1, net.activation)
    z2 = h1 @ net.weights[1].T + net.biases[1]
    h2 = _activate(z2, net.activation)
    q = h2 @ net.weights[2].T + net.biases[2]
    return z1, h1, z2, h2, q


def forward_batch(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Q-values for a batch of observations, shape (n, 3)."""
    x = np.asarray(x, dtype=net.dtype)
    return _forward_cached(net, x)[-1]


class Transition(NamedTuple):
    obs: Observation
    action: int
    reward: float
    next_obs: Observation
    done: bool


class Batch(NamedTuple):
    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_obs: np.ndarray
    done: np.ndarray


class ReplayBuffer:
    """Fixed-capacity ring of transitions with uniform sampling."""

    def __init__(self, capacity: int, dtype=np.float32):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._obs = np.empty((capacity, 6), dtype=dtype)
        self._actions = np.empty(capacity, dtype=np.int64)
        self._rewards = np.empty(capacity, dtype=dtype)
        self._next_obs = np.empty((capacity, 6), dtype=dtype)
        self._done = np.empty(capacity, dtype=dtype)
        self._cursor = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def add(self, t: Transition) -> None:
        if t.action not in (0, 1, 2):
            raise ValueError(f"action index must be 0, 1 or 2, got {t.action}")
        i = self._cursor
        self._obs[i] = t.obs
        self._actions[i] = t.action
        self._rewards[i] = t.reward
        self._next_obs[i] = t.next_obs
        self._done[i] = 1.0 if t.done else 0.0
        self._cursor = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, rng: np.random.Generator, batch_size: int) -> Batch:
        if self._size < batch_size:
            raise ValueError(f"buffer holds {self._size} transitions, need {batch_size}")
        idx = rng.integers(0, self._size, size=batch_size)
        return Batch(
            obs=self._obs[idx].copy(),
            actions=self._actions[idx].copy(),
            rewards=self._rewards[idx].copy(),
            next_obs=self._next_obs[idx].copy(),
            done=self._done[idx].copy(),
        )


class Gradients(NamedTuple):
    weights: list[np.ndarray]
    biases: list[np.ndarray]


def _loss_and_slope(delta: np.ndarray, loss: str) -> tuple[np.ndarray, np.ndarray]:
    if loss == "huber":
        absd = np.abs(delta)
        values = np.where(absd <= 1.0, 0.5 * delta * delta, absd - 0.5)
        slopes = np.clip(delta, -1.0, 1.0)
    elif loss == "mse":
        values = 0.5 * delta * delta
        slopes = delta
    else:
        raise ValueError(f"unknown loss {loss!r}")
    return values, slopes


def backward(
    net: Mlp, batch: Batch, target_net: Mlp, gamma: float, loss: str = "huber"
) -> tuple[Gradients, float]:
    """Gradients of the mean TD loss over the batch, plus the loss value.

    Targets are r + gamma * max_a' Q_target(s', a') for non-terminal
    transitions and plain r for terminal ones.
    """
    dtype = net.dtype
    x = np.asarray(batch.obs, dtype=dtype)
    next_x = np.asarray(batch.next_obs, dtype=dtype)
    rewards = np.asarray(batch.rewards, dtype=dtype)
    done = np.asarray(batch.done, dtype=dtype)
    actions = np.asarray(batch.actions)
    n = x.shape[0]
    if n == 0:
        raise ValueError("batch must be non-empty")

    q_next = forward_batch(target_net, next_x)
    targets = rewards + dtype.type(gamma) * (1.0 - done) * q_next.max(axis=1)

    z1, h1, z2, h2, q = _forward_cached(net, x)
    rows = np.arange(n)
    delta = q[rows, actions] - targets
    values, slopes = _loss_and_slope(delta, loss)
    loss_value = float(values.mean())

    dq = np.zeros_like(q)
    dq[rows, actions] = slopes / n

    if net.activation == "relu":
        dz2_gate = (z2 > 0).astype(dtype)
        dz1_gate = (z1 > 0).astype(dtype)
    else:
        dz2_gate = 1.0 - h2 * h2
        dz1_gate = 1.0 - h1 * h1

    g_w3 = dq.T @ h2
    g_b3 = dq.sum(axis=0)
    dh2 = dq @ net.weights[2]
    dz2 = dh2 * dz2_gate
    g_w2 = dz2.T @ h1
    g_b2 = dz2.sum(axis=0)
    dh1 = dz2 @ net.weights[1]
    dz1 = dh1 * dz1_gate
    g_w1 = dz1.T @ x
    g_b1 = dz1.sum(axis=0)

    return Gradients(weights=[g_w1, g_w2, g_w3], biases=[g_b1, g_b2, g_b3]), loss_value


class Adam:
    """Standard Adam over the network's parameter list, updating in place."""

    def __init__(self, net: Mlp, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.net = net
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        params = net.weights + net.biases
        self._m = [np.zeros_like(p) for p in params]
        self._v = [np.zeros_like(p) for p in params]

    def step(self, grads: Gradients) -> None:
        self.t += 1
        params = self.net.weights + self.net.biases
        gs = grads.weights + grads.biases
        correction1 = 1.0 - self.beta1**self.t
        correction2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, gs, self._m, self._v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            m_hat = m / correction1
            v_hat = v / correction2
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def epsilon_at(step: int, start: float, end: float, decay_steps: int) -> float:
    """Linear schedule from start to end over decay_steps, constant after."""
    if decay_steps <= 0:
        return end
    frac = min(step / decay_steps, 1.0)
    return start + (end - start) * frac


def act_greedy(net: Mlp, obs) -> Action:
    q = forward(net, obs)
    return Action(int(np.argmax(q)))


def act_epsilon(net: Mlp, obs, epsilon: float, rng: np.random.Generator) -> Action:
    if rng.random() < epsilon:
        return Action(int(rng.integers(0, 3)))
    return act_greedy(net, obs)


class DqnPolicy:
    """Greedy rollout wrapper around a frozen network."""

    def __init__(self, net: Mlp):
        self.net = net

    def reset(self, seed: int) -> None:
        pass

    def act(self, obs: Observation) -> Action:
        return act_greedy(self.net, obs)


@dataclass(frozen=True, slots=True)
class TrainConfig:
    gamma: float = 0.99
    learning_rate: float = 1e-3
    batch_size: int = 64
    buffer_capacity: int = 50_000
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_steps: int = 30_000
    target_sync_period: int = 1_000
    total_steps: int = 120_000
    seed: int = 1
    loss: str = "huber"
    activation: str = "relu"
    # Rewards are multiplied by this factor before entering the replay
    # buffer; greedy behavior is invariant to the positive rescaling, and
    # episode returns are always logged unscaled. 1.0 means raw rewards.
    reward_scale: float = 1.0
    # Learning-rate half-life in steps; 0 keeps the rate constant.
    lr_half_life_steps: int = 0
    snapshot_period_episodes: int = 250
    snapshot_eval_episodes: int = 50
    # Snapshot choice: among snapshots whose evaluated success rate reaches
    # this floor, the one with the fewest mean steps wins; when none qualify,
    # fall back to highest success (steps as tie-break).
    snapshot_success_floor: float = 0.875

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must be in (0, 1), got {self.gamma}")
        for name in ("epsilon_start", "epsilon_end"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.batch_size < 1 or self.buffer_capacity < self.batch_size:
            raise ValueError("need buffer_capacity >= batch_size >= 1")
        if self.total_steps < 0:
            raise ValueError("total_steps must be nonnegative")
        if self.loss not in ("huber", "mse"):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.target_sync_period < 1:
            raise ValueError("target_sync_period must be positive")
        if self.reward_scale <= 0.0:
            raise ValueError("reward_scale must be positive")
        if self.lr_half_life_steps < 0:
            raise ValueError("lr_half_life_steps must be nonnegative")
        if not 0.0 <= self.snapshot_success_floor <= 1.0:
            raise ValueError("snapshot_success_floor must be in [0, 1]")


@dataclass(slots=True)
class EpisodeStats:
    episode: int
    steps: int
    outcome: Outcome
    total_reward: float
    rolling_success: float
    rolling_mean_steps: float


@dataclass(slots=True)
class SnapshotStats:
    episode: int
    success_rate: float
    mean_steps: float


@dataclass(slots=True)
class TrainLog:
    """Append-only per-episode training record with trailing-100 rollups."""

    episodes: list[EpisodeStats] = field(default_factory=list)
    snapshots: list[SnapshotStats] = field(default_factory=list)

    def record(self, steps: int, outcome: Outcome, total_reward: float) -> EpisodeStats:
        window = self.episodes[-99:] if self.episodes else []
        successes = sum(1 for e in window if e.outcome is Outcome.SUCCESS)
        steps_sum = sum(e.steps for e in window)
        n = len(window) + 1
        stats = EpisodeStats(
            episode=len(self.episodes) + 1,
            steps=steps,
            outcome=outcome,
            total_reward=total_reward,
            rolling_success=(successes + (1 if outcome is Outcome.SUCCESS else 0)) / n,
            rolling_mean_steps=(steps_sum + steps) / n,
        )
        self.episodes.append(stats)
        return stats

    def to_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["episode", "steps", "outcome", "return", "rolling_success"])
            for e in self.episodes:
                writer.writerow(
                    [e.episode, e.steps, e.outcome.value, repr(e.total_reward), repr(e.rolling_success)]
                )


def _greedy_eval(
    net: Mlp, eval_factory: Callable[[int], EpisodeConfig], episodes: int
) -> tuple[float, float]:
    """Success rate and mean successful steps of the greedy policy."""
    policy = DqnPolicy(net)
    successes = 0
    success_steps = 0
    for i in range(episodes):
        record = run_episode(policy, eval_factory(i))
        if record.success:
            successes += 1
            success_steps += record.steps
    rate = successes / episodes
    mean_steps = success_steps / successes if successes else math.inf
    return rate, mean_steps


def train(
    env_factory: Callable[[int], EpisodeConfig],
    config: TrainConfig,
    eval_factory: Callable[[int], EpisodeConfig] | None = None,
    progress: Callable[[EpisodeStats, float], None] | None = None,
) -> tuple[Mlp, TrainLog]:
    """Run epsilon-greedy DQN training and return (best network, log).

    env_factory maps an episode index to that episode's configuration. One
    gradient step runs per environment step once the buffer can fill a batch;
    the target network hard-syncs on a fixed period. When eval_factory is
    given, the greedy policy is scored periodically on those episodes and the
    best-scoring snapshot is returned instead of the final iterate, since
    continued training can degrade the policy.
    """
    rng = np.random.default_rng([config.seed, TRAIN_STREAM_SALT])
    net = init_mlp(config.seed, activation=config.activation)
    target = net.copy()
    optimizer = Adam(net, lr=config.learning_rate)
    buffer = ReplayBuffer(config.buffer_capacity)
    log = TrainLog()

    best_net: Mlp | None = None
    best_score: tuple[float, float, float] | None = None

    def snapshot_score(rate: float, mean_steps: float) -> tuple[float, float, float]:
        # Snapshots at or above the success floor compete on speed; below it,
        # success dominates.
        if rate >= config.snapshot_success_floor:
            return (1.0, -mean_steps, rate)
        return (0.0, rate, -mean_steps)

    def consider_snapshot(at_episode: int) -> None:
        nonlocal best_net, best_score
        if eval_factory is None:
            return
        rate, mean_steps = _greedy_eval(net, eval_factory, config.snapshot_eval_episodes)
        log.snapshots.append(SnapshotStats(at_episode, rate, mean_steps))
        score = snapshot_score(rate, mean_steps)
        if best_score is None or score > best_score:
            best_score = score
            best_net = net.copy()

    step = 0
    episode = 0
    while step < config.total_steps:
        env = SourceSeekEnv(env_factory(episode))
        obs = env.reset()
        episode_reward = 0.0
        outcome = Outcome.RUNNING
        while not env.done and step < config.total_steps:
            epsilon = epsilon_at(step, config.epsilon_start, config.epsilon_end, config.epsilon_decay_steps)
            action = act_epsilon(net, obs, epsilon, rng)
            result = env.step(action)
            buffer.add(
                Transition(
                    obs, int(action), result.reward * config.reward_scale,
                    result.observation, result.done,
                )
            )
            obs = result.observation
            episode_reward += result.reward
            outcome = result.outcome
            step += 1
            if len(buffer) >= config.batch_size:
                batch = buffer.sample(rng, config.batch_size)
                grads, loss_value = backward(net, batch, target, config.gamma, config.loss)
                if not math.isfinite(loss_value):
                    raise TrainingDiverged(
                        f"loss became non-finite at step {step} (episode {episode + 1})"
                    )
                if config.lr_half_life_steps:
                    optimizer.lr = config.learning_rate * 0.5 ** (step / config.lr_half_life_steps)
                optimizer.step(grads)
            if step % config.target_sync_period == 0:
                target.copy_from(net)
        if not env.done:
            break  # step budget exhausted mid-episode; do not log a partial episode
        episode += 1
        stats = log.record(env.steps, outcome, episode_reward)
        if progress is not None:
            progress(stats, epsilon_at(step, config.epsilon_start, config.epsilon_end, config.epsilon_decay_steps))
        if episode % config.snapshot_period_episodes == 0:
            consider_snapshot(episode)

    if config.total_steps > 0:
        consider_snapshot(episode)
    return (best_net if best_net is not None else net), log


def save(net: Mlp, path) -> None:
    """Write the network to the portable blob format (always float32)."""
    f32 = net if net.dtype == np.float32 else net.astype(np.float32)
    data = blob.encode(f32.weights, f32.biases, f32.activation)
    with open(path, "wb") as fh:
        fh.write(data)


def load(path) -> Mlp:
    """Read a blob back into an Mlp; raises blob.BlobError subclasses."""
    with open(path, "rb") as fh:
        data = fh.read()
    activation, weights, biases = blob.decode(data)
    return Mlp(weights=weights, biases=biases, activation=activation)
