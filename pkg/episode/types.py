"""Value types of the invariant-observation episode."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Literal, NamedTuple, Optional, Protocol, Sequence

import numpy as np

from app_core.errors import ArgumentError
from numkit.params import as_array

MemoryMode = Literal["binary", "normalized"]
MEMORY_MODES: tuple[str, ...] = ("binary", "normalized")

# Cost reported by cost-bearing oracles for a failed action.
INFINITE_COST = math.inf

AFFORDANCE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ActionSet:
    size: int

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ArgumentError(f"an action set needs at least one action, got {self.size}")

    def __contains__(self, action: object) -> bool:
        return isinstance(action, (int, np.integer)) and 0 <= int(action) < self.size


@dataclass(frozen=True)
class AffordanceMap:
    """Non-negative action preferences summing to one."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = as_array(self.values)
        if values.ndim != 1 or values.size < 1:
            raise ArgumentError(f"affordance map must be a non-empty vector, got shape {values.shape}")
        if not np.all(np.isfinite(values)) or np.any(values < 0.0):
            raise ArgumentError("affordance values must be finite and non-negative")
        total = float(values.sum())
        if abs(total - 1.0) > AFFORDANCE_TOLERANCE:
            raise ArgumentError(f"affordance values sum to {total}, expected 1")
        object.__setattr__(self, "values", values)

    @classmethod
    def normalized(cls, weights: Sequence[float]) -> "AffordanceMap":
        weights = np.asarray(weights, dtype=np.float64)
        total = weights.sum()
        if total <= 0:
            raise ArgumentError("cannot normalize an all-zero preference vector")
        return cls(weights / total)

    @property
    def size(self) -> int:
        return int(self.values.size)

    def argmax(self) -> int:
        return int(np.argmax(self.values))


@dataclass(frozen=True)
class FailureMemory:
    """Per-action trial memory; failed entries are exactly zero."""

    mode: MemoryMode
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.mode not in MEMORY_MODES:
            raise ArgumentError(f"unknown memory mode {self.mode!r}")
        values = as_array(self.values)
        if values.ndim != 1 or values.size < 1:
            raise ArgumentError(f"memory must be a non-empty vector, got shape {values.shape}")
        if np.any(values < 0.0) or np.any(values > 1.0):
            raise ArgumentError("memory entries must lie in [0, 1]")
        if self.mode == "binary" and not np.all((values == 0.0) | (values == 1.0)):
            raise ArgumentError("binary memory entries must be 0 or 1")
        object.__setattr__(self, "values", values)

    @property
    def size(self) -> int:
        return int(self.values.size)

    @property
    def live(self) -> np.ndarray:
        """Boolean mask of actions that may still be chosen."""

        return self.values > 0.0

    def candidates(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.live)]

    def has_candidates(self) -> bool:
        return bool(np.any(self.live))

    def zero_indices(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(~self.live)]


@dataclass(frozen=True)
class AssessmentOutcome:
    passed: bool
    cost: Optional[float] = None

    def __post_init__(self) -> None:
        if self.cost is None:
            return
        if math.isnan(self.cost) or self.cost < 0:
            raise ArgumentError(f"assessment cost must be non-negative, got {self.cost}")
        if not self.passed and not math.isinf(self.cost):
            raise ArgumentError("a failed cost-bearing assessment must report the infinite cost")
        if self.passed and math.isinf(self.cost):
            raise ArgumentError("a passed assessment cannot carry the infinite cost")


class EpisodeStep(NamedTuple):
    action: int
    outcome: AssessmentOutcome


@dataclass(frozen=True)
class EpisodeTrace:
    steps: tuple[EpisodeStep, ...]
    succeeded: bool
    trials_used: int
    instance_id: Optional[int] = None

    def __post_init__(self) -> None:
        if self.trials_used != len(self.steps) or self.trials_used < 1:
            raise ArgumentError(f"trace has {len(self.steps)} steps but trials_used={self.trials_used}")
        if self.succeeded != self.steps[-1].outcome.passed:
            raise ArgumentError("succeeded must equal the outcome of the last step")

    @property
    def actions(self) -> tuple[int, ...]:
        return tuple(step.action for step in self.steps)

    @property
    def final_cost(self) -> Optional[float]:
        return self.steps[-1].outcome.cost

    @property
    def has_repeats(self) -> bool:
        return len(set(self.actions)) != len(self.actions)


@dataclass(frozen=True)
class EpisodeConfig:
    max_trials: int = 5
    memory_mode: MemoryMode = "binary"
    # Grid tasks only: also zero the (2r+1)² neighbourhood of a failed cell.
    memory_radius: int = 0

    def __post_init__(self) -> None:
        if self.max_trials < 1:
            raise ArgumentError(f"max_trials must be >= 1, got {self.max_trials}")
        if self.memory_mode not in MEMORY_MODES:
            raise ArgumentError(f"unknown memory mode {self.memory_mode!r}")
        if self.memory_radius < 0:
            raise ArgumentError(f"memory_radius must be >= 0, got {self.memory_radius}")


class RedecisionPolicy(Protocol):
    """What the episode engine needs from a policy."""

    name: str

    def reset(self, observation: Any) -> tuple[Optional[AffordanceMap], Any]:
        """Start an episode: the π₀ affordance (or None) and fresh policy state."""

    def select(self, observation: Any, memory: FailureMemory, state: Any, rng: Any) -> tuple[int, Any]:
        """Choose the next action among live memory entries."""


__all__ = [
    "AFFORDANCE_TOLERANCE",
    "ActionSet",
    "AffordanceMap",
    "AssessmentOutcome",
    "EpisodeConfig",
    "EpisodeStep",
    "EpisodeTrace",
    "FailureMemory",
    "INFINITE_COST",
    "MEMORY_MODES",
    "MemoryMode",
    "RedecisionPolicy",
]
