"""Source-seeking navigation: simulator, DQN trainer, baselines, evaluation,
and a memory-budgeted standalone inference kernel."""

from .env import (
    Action,
    EpisodeConfig,
    Observation,
    Outcome,
    RunRecord,
    SourceSeekEnv,
    StepResult,
    run_episode,
)
from .source import SourceParams

__version__ = "0.1.0"

__all__ = [
    "Action",
    "EpisodeConfig",
    "Observation",
    "Outcome",
    "RunRecord",
    "SourceParams",
    "SourceSeekEnv",
    "StepResult",
    "run_episode",
    "__version__",
]
