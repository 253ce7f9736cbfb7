"""Episode loop, failure memory and trace types."""

from .engine import EpisodeEngine, Oracle, run_episode
from .state_manager import EpisodeState, StateManager, init_memory, update_memory
from .types import (
    ActionSet,
    AffordanceMap,
    AssessmentOutcome,
    EpisodeConfig,
    EpisodeStep,
    EpisodeTrace,
    FailureMemory,
    RedecisionPolicy,
)

__all__ = [
    "ActionSet",
    "AffordanceMap",
    "AssessmentOutcome",
    "EpisodeConfig",
    "EpisodeEngine",
    "EpisodeState",
    "EpisodeStep",
    "EpisodeTrace",
    "FailureMemory",
    "Oracle",
    "RedecisionPolicy",
    "StateManager",
    "init_memory",
    "run_episode",
    "update_memory",
]
