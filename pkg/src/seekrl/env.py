"""POMDP episode engine: randomized world generation, observations, reward.

Per step the agent picks one of three discrete actions (forward at a fixed
speed, or a pure rotation left/right), the pose advances by dt, and the
instantaneous reward is

    r = 1000 * alpha - 100 * beta - 20 * delta_d - 1

where alpha is 1 when the new distance to the source is within the success
radius, beta is 1 on collision or when the step budget runs out without
success, and delta_d is the signed change in distance to the source.

World randomness (heading, source position, obstacle layout, sensor noise)
is derived entirely from the episode seed and is independent of the policy,
so different policies evaluated on the same seed see identical worlds and
identical noise streams.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Protocol

import numpy as np

from .features import FeatureFilter, RawDifferenceFeatures
from .source import SourceParams, intensity, normalize, sample
from .world import (
    Arena,
    LaserScan,
    Obstacle,
    Pose,
    Vec2,
    arena_to_dict,
    collision,
    laser_scan,
    step_kinematics,
)

PLACEMENT_RETRY_CAP = 1000
# Entropy salt mixed with the episode seed to derive the policy's own rng,
# keeping action randomness independent of the world stream.
POLICY_STREAM_SALT = 0x9E3779B9


class EpisodeGenerationError(RuntimeError):
    """Raised when random placement cannot satisfy the spacing rules."""


class Action(enum.IntEnum):
    FORWARD = 0
    LEFT = 1
    RIGHT = 2


class Outcome(enum.Enum):
    RUNNING = "running"
    SUCCESS = "success"
    COLLISION = "collision"
    TIMEOUT = "timeout"


class Observation(NamedTuple):
    """Network input: four ranger channels plus the two source features."""

    l1: float  # front
    l2: float  # right
    l3: float  # back
    l4: float  # left
    s1: float
    s2: float


class Policy(Protocol):
    """Episode-level control interface used by rollouts."""

    def reset(self, seed: int) -> None: ...

    def act(self, obs: Observation) -> Action: ...


@dataclass(frozen=True, slots=True)
class EpisodeConfig:
    seed: int = 0
    arena_width: float = 5.0
    arena_height: float = 5.0
    obstacle_count: int = 0
    success_radius: float = 1.0
    max_steps: int = 300
    dt: float = 0.1
    forward_speed: float = 0.5
    turn_forward_speed: float = 0.0
    yaw_rate_deg: float = 54.0
    robot_radius: float = 0.1
    laser_max_range: float = 5.0
    normalize_lasers: bool = True
    spawn: str = "center"
    ablation: bool = False
    source: SourceParams = field(default_factory=SourceParams)
    source_wall_margin: float = 0.5
    spawn_clearance: float = 0.8
    min_source_spawn_distance: float = 1.25
    obstacle_half_extent_min: float = 0.15
    obstacle_half_extent_max: float = 0.4

    def __post_init__(self) -> None:
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.success_radius <= 0.0:
            raise ValueError("success_radius must be positive")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.obstacle_count < 0:
            raise ValueError("obstacle_count must be nonnegative")
        if self.arena_width <= 0.0 or self.arena_height <= 0.0:
            raise ValueError("arena dimensions must be positive")
        if self.spawn != "center":
            raise ValueError(f"unsupported spawn rule {self.spawn!r}")
        if not 0.0 < self.obstacle_half_extent_min <= self.obstacle_half_extent_max:
            raise ValueError("obstacle half-extent range must satisfy 0 < min <= max")

    @property
    def yaw_rate(self) -> float:
        return math.radians(self.yaw_rate_deg)


@dataclass(frozen=True, slots=True)
class StepResult:
    observation: Observation
    reward: float
    done: bool
    outcome: Outcome
    pose: Pose
    distance_to_source: float


class TrajectoryStep(NamedTuple):
    """One logged step; lasers are raw meters regardless of observation scaling."""

    step: int
    x: float
    y: float
    heading: float
    action: int
    reward: float
    c: float
    c_f: float
    s1: float
    s2: float
    l_front: float
    l_right: float
    l_back: float
    l_left: float
    distance: float


@dataclass(slots=True)
class RunRecord:
    """Per-episode outcome summary consumed by the evaluation harness."""

    success: bool
    steps: int
    path_length: float
    shortest_path: float
    outcome: Outcome
    seed: int
    total_reward: float
    trajectory: list[TrajectoryStep] | None = None
    scene: dict | None = None


class SourceSeekEnv:
    """One episode instance. Create one env per worker; instances share nothing."""

    def __init__(self, config: EpisodeConfig):
        self.config = config
        self.arena: Arena | None = None
        self.source_position: Vec2 | None = None
        self.pose: Pose | None = None
        self.start_distance = 0.0
        self.distance_to_source = 0.0
        self.steps = 0
        self.done = False
        self._features: FeatureFilter | RawDifferenceFeatures | None = None
        self._rng_noise: np.random.Generator | None = None
        self.last_scan: LaserScan | None = None
        self.last_c = 0.0
        self.last_s1 = 0.0
        self.last_s2 = 0.0

    @property
    def filter_state(self) -> float:
        """Current smoothing state (c_f, or previous reading in ablation mode)."""
        f = self._features
        if isinstance(f, FeatureFilter):
            return f.c_f
        assert isinstance(f, RawDifferenceFeatures)
        return f.c_prev

    def reset(self) -> Observation:
        cfg = self.config
        seq = np.random.SeedSequence(cfg.seed)
        world_seq, noise_seq = seq.spawn(2)
        rng_world = np.random.default_rng(world_seq)
        self._rng_noise = np.random.default_rng(noise_seq)

        spawn = Vec2(cfg.arena_width / 2.0, cfg.arena_height / 2.0)
        heading = float(rng_world.uniform(-math.pi, math.pi))
        source = self._place_source(rng_world, spawn)
        obstacles = self._place_obstacles(rng_world, spawn, source)

        self.arena = Arena(cfg.arena_width, cfg.arena_height, obstacles)
        self.source_position = source
        self.pose = Pose(spawn, heading)
        if collision(self.pose, self.arena, cfg.robot_radius):
            raise EpisodeGenerationError(
                "spawn position collides; arena is smaller than the robot clearance"
            )
        self.start_distance = spawn.distance_to(source)
        self.distance_to_source = self.start_distance
        self.steps = 0
        self.done = False

        c0 = normalize(cfg.source, sample(cfg.source, self.start_distance, self._rng_noise))
        if cfg.ablation:
            self._features = RawDifferenceFeatures(c0)
        else:
            self._features = FeatureFilter(c0)
        self.last_c = c0
        self.last_s1 = 0.0
        self.last_s2 = 2.0 * c0 - 1.0
        return self._observe()

    def step(self, action: Action) -> StepResult:
        if self.done:
            raise RuntimeError("step() called on a finished episode; call reset() first")
        cfg = self.config
        assert self.pose is not None and self.arena is not None and self.source_position is not None

        if action == Action.FORWARD:
            speed, yaw = cfg.forward_speed, 0.0
        elif action == Action.LEFT:
            speed, yaw = cfg.turn_forward_speed, cfg.yaw_rate
        elif action == Action.RIGHT:
            speed, yaw = cfg.turn_forward_speed, -cfg.yaw_rate
        else:
            raise ValueError(f"unknown action {action!r}")

        dist_before = self.distance_to_source
        self.pose = step_kinematics(self.pose, speed, yaw, cfg.dt)
        self.steps += 1
        dist_after = self.pose.position.distance_to(self.source_position)
        self.distance_to_source = dist_after

        collided = collision(self.pose, self.arena, cfg.robot_radius)
        reached = dist_after <= cfg.success_radius
        out_of_steps = self.steps >= cfg.max_steps

        alpha = 1.0 if reached else 0.0
        beta = 1.0 if (collided or (out_of_steps and not reached)) else 0.0
        delta_d = dist_after - dist_before
        reward = 1000.0 * alpha - 100.0 * beta - 20.0 * delta_d - 1.0

        if collided:
            outcome = Outcome.COLLISION
        elif reached:
            outcome = Outcome.SUCCESS
        elif out_of_steps:
            outcome = Outcome.TIMEOUT
        else:
            outcome = Outcome.RUNNING
        self.done = outcome is not Outcome.RUNNING

        c = normalize(cfg.source, sample(cfg.source, dist_after, self._rng_noise))
        s1, s2 = self._features.update(c)
        self.last_c, self.last_s1, self.last_s2 = c, s1, s2
        obs = self._observe()
        return StepResult(obs, reward, self.done, outcome, self.pose, dist_after)

    def _observe(self) -> Observation:
        cfg = self.config
        scan = laser_scan(self.pose, self.arena, cfg.laser_max_range)
        self.last_scan = scan
        if cfg.normalize_lasers:
            # Plain division, not multiplication by a precomputed inverse:
            # the inference kernel divides, and the two must round identically.
            r = cfg.laser_max_range
            return Observation(
                scan.front / r, scan.right / r, scan.back / r, scan.left / r,
                self.last_s1, self.last_s2,
            )
        return Observation(scan.front, scan.right, scan.back, scan.left, self.last_s1, self.last_s2)

    def _place_source(self, rng: np.random.Generator, spawn: Vec2) -> Vec2:
        cfg = self.config
        m = cfg.source_wall_margin
        if cfg.arena_width <= 2 * m or cfg.arena_height <= 2 * m:
            raise EpisodeGenerationError("arena too small for the source wall margin")
        for _ in range(PLACEMENT_RETRY_CAP):
            candidate = Vec2(
                float(rng.uniform(m, cfg.arena_width - m)),
                float(rng.uniform(m, cfg.arena_height - m)),
            )
            if candidate.distance_to(spawn) > cfg.min_source_spawn_distance:
                return candidate
        raise EpisodeGenerationError(
            "could not place the source outside the spawn clearance; arena too small"
        )

    def _place_obstacles(
        self, rng: np.random.Generator, spawn: Vec2, source: Vec2
    ) -> list[Obstacle]:
        cfg = self.config
        obstacles: list[Obstacle] = []
        for _ in range(cfg.obstacle_count):
            placed = False
            for _ in range(PLACEMENT_RETRY_CAP):
                hx = float(rng.uniform(cfg.obstacle_half_extent_min, cfg.obstacle_half_extent_max))
                hy = float(rng.uniform(cfg.obstacle_half_extent_min, cfg.obstacle_half_extent_max))
                if cfg.arena_width <= 2 * hx or cfg.arena_height <= 2 * hy:
                    continue
                candidate = Obstacle(
                    center=Vec2(
                        float(rng.uniform(hx, cfg.arena_width - hx)),
                        float(rng.uniform(hy, cfg.arena_height - hy)),
                    ),
                    half_extents=Vec2(hx, hy),
                )
                if candidate.distance_to_point(spawn) < cfg.spawn_clearance:
                    continue
                if candidate.distance_to_point(source) < cfg.success_radius:
                    continue
                if any(candidate.overlaps(o) for o in obstacles):
                    continue
                obstacles.append(candidate)
                placed = True
                break
            if not placed:
                raise EpisodeGenerationError(
                    f"obstacle placement failed after {PLACEMENT_RETRY_CAP} attempts; "
                    "arena too crowded"
                )
        return obstacles

    def noise_free_reading(self, dist: float) -> float:
        """Deterministic reading used by diagnostics; does not touch the noise stream."""
        return normalize(self.config.source, intensity(self.config.source, dist))


def policy_stream_seed(episode_seed: int) -> list[int]:
    """Entropy for the policy's own generator, disjoint from the world stream."""
    return [episode_seed, POLICY_STREAM_SALT]


def run_episode(
    policy: Policy,
    config: EpisodeConfig,
    collect_trajectory: bool = False,
) -> RunRecord:
    """Roll one episode to termination and summarize it.

    The policy is reseeded from the episode seed through a salted stream, so
    stochastic policies are reproducible and paired across methods.
    """
    env = SourceSeekEnv(config)
    obs = env.reset()
    policy.reset(config.seed)

    trajectory: list[TrajectoryStep] | None = [] if collect_trajectory else None
    path_length = 0.0
    total_reward = 0.0
    prev = env.pose.position
    outcome = Outcome.RUNNING

    while not env.done:
        action = policy.act(obs)
        result = env.step(action)
        obs = result.observation
        pos = result.pose.position
        path_length += prev.distance_to(pos)
        prev = pos
        total_reward += result.reward
        outcome = result.outcome
        if trajectory is not None:
            scan = env.last_scan
            trajectory.append(
                TrajectoryStep(
                    step=env.steps,
                    x=pos.x,
                    y=pos.y,
                    heading=result.pose.heading,
                    action=int(action),
                    reward=result.reward,
                    c=env.last_c,
                    c_f=env.filter_state,
                    s1=env.last_s1,
                    s2=env.last_s2,
                    l_front=scan.front,
                    l_right=scan.right,
                    l_back=scan.back,
                    l_left=scan.left,
                    distance=result.distance_to_source,
                )
            )

    scene = None
    if collect_trajectory:
        scene = scene_dict(env)
    return RunRecord(
        success=outcome is Outcome.SUCCESS,
        steps=env.steps,
        path_length=path_length,
        shortest_path=env.start_distance,
        outcome=outcome,
        seed=config.seed,
        total_reward=total_reward,
        trajectory=trajectory,
        scene=scene,
    )


def scene_dict(env: SourceSeekEnv) -> dict:
    """Scene-file payload for plotting: arena geometry plus episode markers."""
    data = arena_to_dict(env.arena)
    data["source"] = [env.source_position.x, env.source_position.y]
    data["success_radius"] = env.config.success_radius
    data["start"] = [env.config.arena_width / 2.0, env.config.arena_height / 2.0]
    return data


def make_episode_factory(
    template: EpisodeConfig,
    seed_base: int,
    obstacle_counts: tuple[int, ...] | list[int] | None = None,
) -> Callable[[int], EpisodeConfig]:
    """Derive per-episode configs: seed_base + i, obstacle counts cycling."""
    counts = tuple(obstacle_counts) if obstacle_counts else (template.obstacle_count,)

    def factory(index: int) -> EpisodeConfig:
        return replace(template, seed=seed_base + index, obstacle_count=counts[index % len(counts)])

    return factory
