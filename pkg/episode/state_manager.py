"""Failure memory and per-episode state helpers."""

from __future__ import annotations

from typing import Any, List, Optional, Sequence

import numpy as np
from typing_extensions import NotRequired, TypedDict

from app_core.errors import ArgumentError

from .types import AffordanceMap, AssessmentOutcome, EpisodeStep, FailureMemory, MemoryMode


class StepRecord(TypedDict):
    trial_index: int
    action: int
    passed: bool
    cost: NotRequired[Optional[float]]


class EpisodeState(TypedDict, total=False):
    policy: str
    trial_index: int
    memory: FailureMemory
    affordance: Optional[AffordanceMap]
    policy_state: Any
    steps: List[EpisodeStep]
    history: List[StepRecord]
    transition: str
    succeeded: bool
    error: Optional[str]


def init_memory(
    mode: MemoryMode,
    affordance: Optional[AffordanceMap] = None,
    n: Optional[int] = None,
) -> FailureMemory:
    """All-ones (binary) or a copy of the affordance floored at the smallest normal float (normalized)."""

    if mode == "binary":
        size = n if n is not None else (affordance.size if affordance is not None else 0)
        if size < 1:
            raise ArgumentError(f"binary memory needs a positive action count, got {size}")
        if affordance is not None and affordance.size != size:
            raise ArgumentError(f"affordance covers {affordance.size} actions, expected {size}")
        return FailureMemory("binary", np.ones(size))
    if mode == "normalized":
        if affordance is None:
            raise ArgumentError("normalized memory needs the π₀ affordance")
        if n is not None and affordance.size != n:
            raise ArgumentError(f"affordance covers {affordance.size} actions, expected {n}")
        # untried actions stay strictly positive so only failures read as zero
        return FailureMemory("normalized", np.maximum(affordance.values, np.finfo(np.float64).tiny))
    raise ArgumentError(f"unknown memory mode {mode!r}")


def neighbourhood(action: int, radius: int, grid_shape: Optional[Sequence[int]]) -> list[int]:
    """Flat indices of the square of half-width ``radius`` around ``action``."""

    if radius == 0:
        return [action]
    if grid_shape is None:
        raise ArgumentError("memory_radius > 0 needs a grid-shaped action set")
    rows, cols = grid_shape
    row, col = divmod(action, cols)
    cells = []
    for r in range(max(0, row - radius), min(rows, row + radius + 1)):
        for c in range(max(0, col - radius), min(cols, col + radius + 1)):
            cells.append(r * cols + c)
    return cells


def update_memory(
    memory: FailureMemory,
    failed_action: int,
    *,
    radius: int = 0,
    grid_shape: Optional[Sequence[int]] = None,
) -> FailureMemory:
    """Zero the failed action (and its neighbourhood when ``radius`` > 0)."""

    if not 0 <= failed_action < memory.size:
        raise ArgumentError(f"action {failed_action} outside [0, {memory.size})")
    if grid_shape is not None and int(np.prod(grid_shape)) != memory.size:
        raise ArgumentError(f"grid {tuple(grid_shape)} does not cover {memory.size} actions")
    values = memory.values.copy()
    values[neighbourhood(int(failed_action), radius, grid_shape)] = 0.0
    return FailureMemory(memory.mode, values)


class StateManager:
    """Builds and updates the mutable state of one running episode."""

    @staticmethod
    def create_initial_state(
        policy_name: str,
        memory: FailureMemory,
        affordance: Optional[AffordanceMap],
        policy_state: Any,
    ) -> EpisodeState:
        return EpisodeState(
            policy=policy_name,
            trial_index=0,
            memory=memory,
            affordance=affordance,
            policy_state=policy_state,
            steps=[],
            history=[],
            transition="select",
            succeeded=False,
            error=None,
        )

    @staticmethod
    def record_step(state: EpisodeState, action: int, outcome: AssessmentOutcome) -> None:
        state.setdefault("steps", []).append(EpisodeStep(action, outcome))
        state.setdefault("history", []).append(
            StepRecord(
                trial_index=state.get("trial_index", 0),
                action=action,
                passed=outcome.passed,
                cost=outcome.cost,
            )
        )
        state["succeeded"] = outcome.passed
        state["trial_index"] = state.get("trial_index", 0) + 1

    @staticmethod
    def failed_actions(state: EpisodeState) -> list[int]:
        return [step.action for step in state.get("steps", []) if not step.outcome.passed]


__all__ = [
    "EpisodeState",
    "StateManager",
    "StepRecord",
    "init_memory",
    "neighbourhood",
    "update_memory",
]
