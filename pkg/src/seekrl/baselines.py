"""Comparison policies: a bounce-and-rotate exploration FSM and random actions.

The FSM is deliberately light-blind: it reads only the front ranger and never
looks at the source features, so comparing it against the trained policy
isolates the value of the light information. It cruises forward until the
front reading drops below a threshold, then rotates a random amount between
a quarter and three-quarter turn in a random direction before cruising again.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .env import Action, Observation, policy_stream_seed


class FsmMode(enum.Enum):
    CRUISE = "cruise"
    TURN = "turn"


@dataclass(slots=True)
class FsmState:
    mode: FsmMode = FsmMode.CRUISE
    turn_direction: Action = Action.LEFT
    turn_steps_remaining: int = 0
    front_threshold: float = 0.6


class FsmPolicy:
    """Bounce-and-rotate explorer driven by the front ranger only."""

    def __init__(
        self,
        front_threshold: float = 0.6,
        turn_min_deg: float = 90.0,
        turn_max_deg: float = 270.0,
        yaw_rate_deg: float = 54.0,
        dt: float = 0.1,
        laser_max_range: float = 5.0,
        normalized_lasers: bool = True,
    ):
        if not 0.0 < turn_min_deg <= turn_max_deg:
            raise ValueError("turn angle range must satisfy 0 < min <= max")
        deg_per_step = yaw_rate_deg * dt
        self.turn_steps_min = max(1, math.ceil(turn_min_deg / deg_per_step))
        self.turn_steps_max = max(self.turn_steps_min, math.floor(turn_max_deg / deg_per_step))
        self.front_threshold = front_threshold
        self.laser_max_range = laser_max_range
        self.normalized_lasers = normalized_lasers
        self.state = FsmState(front_threshold=front_threshold)
        self._rng = np.random.default_rng()

    def reset(self, seed: int) -> None:
        self._rng = np.random.default_rng(policy_stream_seed(seed))
        self.state = FsmState(front_threshold=self.front_threshold)

    def act(self, obs: Observation) -> Action:
        state = self.state
        if state.mode is FsmMode.TURN:
            state.turn_steps_remaining -= 1
            if state.turn_steps_remaining <= 0:
                state.mode = FsmMode.CRUISE
            return state.turn_direction

        front_m = obs.l1 * self.laser_max_range if self.normalized_lasers else obs.l1
        if front_m > state.front_threshold:
            return Action.FORWARD

        state.turn_direction = Action.LEFT if self._rng.integers(0, 2) == 0 else Action.RIGHT
        duration = int(self._rng.integers(self.turn_steps_min, self.turn_steps_max + 1))
        state.turn_steps_remaining = duration - 1
        state.mode = FsmMode.TURN if state.turn_steps_remaining > 0 else FsmMode.CRUISE
        return state.turn_direction


class RandomPolicy:
    """Uniform over the three actions; ignores the observation entirely."""

    def __init__(self):
        self._rng = np.random.default_rng()

    def reset(self, seed: int) -> None:
        self._rng = np.random.default_rng(policy_stream_seed(seed))

    def act(self, obs: Observation) -> Action:
        return Action(int(self._rng.integers(0, 3)))
