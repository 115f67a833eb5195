"""Run configuration: YAML file with sections mirroring the module boundaries.

Every constant of the task (source curve, speeds, step budget, radii, network
training hyperparameters) lives here with a default, so experiments override
them in one place and nothing is hard-coded at call sites. Unknown keys are
rejected rather than silently ignored, and every range constraint is checked
at parse time with the offending key named in the error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import yaml

from .dqn import TrainConfig
from .env import EpisodeConfig
from .source import SourceParams

KNOWN_POLICIES = ("dqn", "fsm", "random")


class ConfigError(ValueError):
    pass


def _type_name(t) -> str:
    return {bool: "boolean", int: "integer", float: "number", str: "string"}.get(t, str(t))


@dataclass(frozen=True)
class _Key:
    default: Any
    kind: type
    check: Callable[[Any], bool] | None = None
    constraint: str = ""


def _pos(v) -> bool:
    return v > 0


def _nonneg(v) -> bool:
    return v >= 0


def _unit(v) -> bool:
    return 0.0 <= v <= 1.0


_SCHEMA: dict[str, dict[str, _Key]] = {
    "env": {
        "arena_width": _Key(5.0, float, _pos, "must be > 0"),
        "arena_height": _Key(5.0, float, _pos, "must be > 0"),
        "dt": _Key(0.1, float, _pos, "must be > 0"),
        "max_steps": _Key(300, int, lambda v: v >= 1, "must be >= 1"),
        "success_radius": _Key(1.0, float, _pos, "must be > 0"),
        "robot_radius": _Key(0.1, float, _pos, "must be > 0"),
        "forward_speed": _Key(0.5, float, _nonneg, "must be >= 0"),
        "turn_forward_speed": _Key(0.0, float, _nonneg, "must be >= 0"),
        "yaw_rate_deg": _Key(54.0, float, _pos, "must be > 0"),
        "laser_max_range": _Key(5.0, float, _pos, "must be > 0"),
        "normalize_lasers": _Key(True, bool),
        "obstacle_count": _Key(0, int, _nonneg, "must be >= 0"),
        "ablation": _Key(False, bool),
        "source_wall_margin": _Key(0.5, float, _nonneg, "must be >= 0"),
        "spawn_clearance": _Key(0.8, float, _nonneg, "must be >= 0"),
        "min_source_spawn_distance": _Key(1.25, float, _nonneg, "must be >= 0"),
        "obstacle_half_extent_min": _Key(0.15, float, _pos, "must be > 0"),
        "obstacle_half_extent_max": _Key(0.4, float, _pos, "must be > 0"),
        "spawn": _Key("center", str, lambda v: v == "center", "must be 'center'"),
    },
    "source": {
        "a": _Key(399.0, float, _pos, "must be > 0"),
        "b": _Key(-2.6, float),
        "c": _Key(5.1, float, lambda v: v != 0.0, "must be nonzero"),
        "noise_sigma": _Key(4.0, float, _nonneg, "must be >= 0"),
        "normalizer": _Key(399.0, float, _pos, "must be > 0"),
    },
    "train": {
        "gamma": _Key(0.99, float, lambda v: 0.0 < v < 1.0, "must be in (0, 1)"),
        "learning_rate": _Key(1e-3, float, _pos, "must be > 0"),
        "batch_size": _Key(64, int, lambda v: v >= 1, "must be >= 1"),
        "buffer_capacity": _Key(50_000, int, lambda v: v >= 1, "must be >= 1"),
        "epsilon_start": _Key(1.0, float, _unit, "must be in [0, 1]"),
        "epsilon_end": _Key(0.05, float, _unit, "must be in [0, 1]"),
        "epsilon_decay_steps": _Key(30_000, int, _nonneg, "must be >= 0"),
        "target_sync_period": _Key(1_000, int, lambda v: v >= 1, "must be >= 1"),
        "total_steps": _Key(120_000, int, _nonneg, "must be >= 0"),
        "seed": _Key(1, int),
        "loss": _Key("huber", str, lambda v: v in ("huber", "mse"), "must be 'huber' or 'mse'"),
        "activation": _Key("relu", str, lambda v: v in ("relu", "tanh"), "must be 'relu' or 'tanh'"),
        "reward_scale": _Key(1.0, float, _pos, "must be > 0"),
        "obstacle_counts": _Key([0, 1, 2, 3], list),
        "episode_seed_base": _Key(1_000_000, int),
        "snapshot_period_episodes": _Key(250, int, lambda v: v >= 1, "must be >= 1"),
        "snapshot_eval_episodes": _Key(50, int, lambda v: v >= 1, "must be >= 1"),
        "snapshot_seed_base": _Key(7_000_000, int),
        "snapshot_obstacle_counts": _Key([0, 3], list),
    },
    "eval": {
        "episodes": _Key(200, int, lambda v: v >= 1, "must be >= 1"),
        "seed_base": _Key(5_000_000, int),
        "obstacle_counts": _Key([0, 3], list),
        "policies": _Key(["dqn", "fsm", "random"], list),
        "workers": _Key(1, int, lambda v: v >= 1, "must be >= 1"),
        "export_episodes": _Key(3, int, lambda v: v >= 1, "must be >= 1"),
        "fsm_front_threshold": _Key(0.6, float, _pos, "must be > 0"),
        "fsm_turn_min_deg": _Key(90.0, float, _pos, "must be > 0"),
        "fsm_turn_max_deg": _Key(270.0, float, _pos, "must be > 0"),
    },
    "io": {
        "out_dir": _Key("runs", str),
        "verbosity": _Key(1, int, lambda v: 0 <= v <= 2, "must be 0, 1, or 2"),
    },
}


def _coerce(path: str, value: Any, key: _Key) -> Any:
    if key.kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected boolean, got {value!r}")
        return value
    if key.kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected integer, got {value!r}")
        return value
    if key.kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected number, got {value!r}")
        return float(value)
    if key.kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected string, got {value!r}")
        return value
    if key.kind is list:
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected list, got {value!r}")
        return list(value)
    raise AssertionError(f"unhandled schema type for {path}")


def _validated(raw: dict[str, Any]) -> dict[str, dict[str, Any]]:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping of sections")
    result: dict[str, dict[str, Any]] = {}
    for section, keys in _SCHEMA.items():
        result[section] = {name: key.default for name, key in keys.items()}
    for section, content in raw.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section {section!r}")
        if content is None:
            continue
        if not isinstance(content, dict):
            raise ConfigError(f"section {section!r} must be a mapping")
        for name, value in content.items():
            if name not in _SCHEMA[section]:
                raise ConfigError(f"unknown config key {section}.{name}")
            key = _SCHEMA[section][name]
            path = f"{section}.{name}"
            value = _coerce(path, value, key)
            if key.check is not None and not key.check(value):
                raise ConfigError(f"invalid value for {path}: {key.constraint}, got {value!r}")
            result[section][name] = value
    _cross_checks(result)
    return result


def _cross_checks(cfg: dict[str, dict[str, Any]]) -> None:
    env = cfg["env"]
    if env["obstacle_half_extent_min"] > env["obstacle_half_extent_max"]:
        raise ConfigError("env.obstacle_half_extent_min must be <= env.obstacle_half_extent_max")
    ev = cfg["eval"]
    if ev["fsm_turn_min_deg"] > ev["fsm_turn_max_deg"]:
        raise ConfigError("eval.fsm_turn_min_deg must be <= eval.fsm_turn_max_deg")
    for section, name in (("train", "obstacle_counts"), ("train", "snapshot_obstacle_counts"),
                          ("eval", "obstacle_counts")):
        counts = cfg[section][name]
        if not counts:
            raise ConfigError(f"{section}.{name} must not be empty")
        for v in counts:
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                raise ConfigError(f"{section}.{name}: entries must be integers >= 0, got {v!r}")
    for p in ev["policies"]:
        if p not in KNOWN_POLICIES:
            raise ConfigError(f"eval.policies: unknown policy {p!r} (choose from {KNOWN_POLICIES})")
    if not ev["policies"]:
        raise ConfigError("eval.policies must not be empty")


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration for one run, assembled from defaults plus a file."""

    env: dict[str, Any]
    source: dict[str, Any]
    train: dict[str, Any]
    eval: dict[str, Any]
    io: dict[str, Any]

    @staticmethod
    def from_mapping(raw: dict[str, Any]) -> "RunConfig":
        cfg = _validated(raw)
        return RunConfig(**cfg)

    @staticmethod
    def default() -> "RunConfig":
        return RunConfig.from_mapping({})

    @staticmethod
    def from_file(path) -> "RunConfig":
        with open(path) as fh:
            try:
                raw = yaml.safe_load(fh)
            except yaml.YAMLError as exc:
                raise ConfigError(f"cannot parse {path}: {exc}") from exc
        return RunConfig.from_mapping(raw if raw is not None else {})

    def source_params(self) -> SourceParams:
        s = self.source
        return SourceParams(
            a=s["a"], b=s["b"], c=s["c"],
            noise_sigma=s["noise_sigma"], normalizer=s["normalizer"],
        )

    def episode_template(self, seed: int = 0) -> EpisodeConfig:
        e = self.env
        try:
            return EpisodeConfig(
                seed=seed,
                arena_width=e["arena_width"],
                arena_height=e["arena_height"],
                obstacle_count=e["obstacle_count"],
                success_radius=e["success_radius"],
                max_steps=e["max_steps"],
                dt=e["dt"],
                forward_speed=e["forward_speed"],
                turn_forward_speed=e["turn_forward_speed"],
                yaw_rate_deg=e["yaw_rate_deg"],
                robot_radius=e["robot_radius"],
                laser_max_range=e["laser_max_range"],
                normalize_lasers=e["normalize_lasers"],
                spawn=e["spawn"],
                ablation=e["ablation"],
                source=self.source_params(),
                source_wall_margin=e["source_wall_margin"],
                spawn_clearance=e["spawn_clearance"],
                min_source_spawn_distance=e["min_source_spawn_distance"],
                obstacle_half_extent_min=e["obstacle_half_extent_min"],
                obstacle_half_extent_max=e["obstacle_half_extent_max"],
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def train_config(self) -> TrainConfig:
        t = self.train
        try:
            return TrainConfig(
                gamma=t["gamma"],
                learning_rate=t["learning_rate"],
                batch_size=t["batch_size"],
                buffer_capacity=t["buffer_capacity"],
                epsilon_start=t["epsilon_start"],
                epsilon_end=t["epsilon_end"],
                epsilon_decay_steps=t["epsilon_decay_steps"],
                target_sync_period=t["target_sync_period"],
                total_steps=t["total_steps"],
                seed=t["seed"],
                loss=t["loss"],
                activation=t["activation"],
                reward_scale=t["reward_scale"],
                snapshot_period_episodes=t["snapshot_period_episodes"],
                snapshot_eval_episodes=t["snapshot_eval_episodes"],
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
