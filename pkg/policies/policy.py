"""Re-decision policies as seen by the episode engine."""

from __future__ import annotations

from typing import Literal, NamedTuple, Optional

import numpy as np

from app_core.errors import ArgumentError
from episode.types import AffordanceMap, FailureMemory
from numkit.rng import Rng

from .selectors import (
    PolicyState,
    base_forward,
    fmp1_scores,
    fmp2_scores,
    select_fmp1,
    select_fmp2,
    select_lpre,
    select_random,
    select_sorting,
)
from .weights import PolicyWeights


class DecisionScores(NamedTuple):
    """What a policy consults to pick its next action, before masking."""

    values: np.ndarray
    # "probability" for affordances and uniform draws, "value" for Q heads
    kind: Literal["probability", "value"]


def _uniform_over_live(memory: FailureMemory) -> DecisionScores:
    live = memory.live.astype(np.float64)
    return DecisionScores(live / max(live.sum(), 1.0), "probability")


class Policy:
    """Base class: ``reset`` once per episode, then ``select`` once per trial."""

    name = "policy"

    def __init__(self, action_count: int, weights: Optional[PolicyWeights] = None) -> None:
        if action_count < 1:
            raise ArgumentError(f"action_count must be >= 1, got {action_count}")
        if weights is not None and weights.action_count != action_count:
            raise ArgumentError(f"weights cover {weights.action_count} actions, policy {action_count}")
        self.action_count = action_count
        self.weights = weights

    def __repr__(self) -> str:
        return f"{type(self).__name__}(name={self.name!r}, actions={self.action_count})"

    def reset(self, observation: np.ndarray) -> tuple[Optional[AffordanceMap], PolicyState]:
        affordance = None if self.weights is None else base_forward(observation, self.weights)
        return affordance, PolicyState(affordance=affordance)

    def select(self, observation: np.ndarray, memory: FailureMemory, state: PolicyState, rng: Rng):
        raise NotImplementedError

    def decision_scores(self, observation: np.ndarray, memory: FailureMemory, state: PolicyState) -> DecisionScores:
        """Scores behind the next ``select`` call; consumes no randomness and leaves ``state`` alone."""

        raise NotImplementedError

    def _affordance_of(self, observation: np.ndarray, state: PolicyState) -> AffordanceMap:
        if state.affordance is not None:
            return state.affordance
        if self.weights is None:
            raise ArgumentError(f"policy {self.name!r} has no π₀")
        return base_forward(observation, self.weights)


class RandomElimination(Policy):
    """Uniform over untried actions; needs no π₀."""

    name = "RE"

    def select(self, observation, memory, state, rng):
        return select_random(memory, rng), state.advanced()

    def decision_scores(self, observation, memory, state):
        return _uniform_over_live(memory)


class LearnedPolicyRandomElimination(Policy):
    """π₀ first, then uniform over the remaining actions."""

    name = "LPRE"

    def select(self, observation, memory, state, rng):
        action = select_lpre(self._affordance_of(observation, state), memory, state.trial_index, rng)
        return action, state.advanced()

    def decision_scores(self, observation, memory, state):
        if state.trial_index == 0:
            return DecisionScores(self._affordance_of(observation, state).values, "probability")
        return _uniform_over_live(memory)


class SortingPolicy(Policy):
    """Process of elimination: next-highest affordance among untried actions."""

    name = "SP"

    def select(self, observation, memory, state, rng):
        return select_sorting(self._affordance_of(observation, state), memory), state.advanced()

    def decision_scores(self, observation, memory, state):
        return DecisionScores(self._affordance_of(observation, state).values, "probability")


class FMP1Policy(Policy):
    """Masked-embedding failure-aware policy (FMP-1, or FMP-1.5 with a learned memory encoder)."""

    def __init__(self, weights: PolicyWeights, name: Optional[str] = None) -> None:
        if weights.architecture != "fmp1":
            raise ArgumentError(f"FMP-1 policy needs fmp1 weights, got {weights.architecture!r}")
        super().__init__(weights.action_count, weights)
        self.name = name or ("FMP-1.5" if weights.spec.mem_encoder == "learned" else "FMP-1")

    def select(self, observation, memory, state, rng):
        if state.trial_index == 0:
            return select_sorting(self._affordance_of(observation, state), memory), state.advanced()
        return select_fmp1(observation, memory, self.weights), state.advanced()

    def decision_scores(self, observation, memory, state):
        if state.trial_index == 0:
            return DecisionScores(self._affordance_of(observation, state).values, "probability")
        return DecisionScores(fmp1_scores(observation, memory, self.weights), "value")


class FMP2Policy(Policy):
    """Recurrent failure-aware policy."""

    name = "FMP-2"

    def __init__(self, weights: PolicyWeights, name: Optional[str] = None) -> None:
        if weights.architecture != "fmp2":
            raise ArgumentError(f"FMP-2 policy needs fmp2 weights, got {weights.architecture!r}")
        super().__init__(weights.action_count, weights)
        if name:
            self.name = name

    def select(self, observation, memory, state, rng):
        action, next_state = select_fmp2(observation, memory, state, self.weights)
        if state.trial_index == 0 and not self.weights.spec.emit_first:
            # the seed step only primes the hidden state; a₀ comes from π₀
            action = select_sorting(self._affordance_of(observation, state), memory)
        return action, next_state

    def decision_scores(self, observation, memory, state):
        if state.trial_index == 0 and not self.weights.spec.emit_first:
            return DecisionScores(self._affordance_of(observation, state).values, "probability")
        scores, _ = fmp2_scores(observation, memory, state, self.weights)
        return DecisionScores(scores, "value")


__all__ = [
    "DecisionScores",
    "FMP1Policy",
    "FMP2Policy",
    "LearnedPolicyRandomElimination",
    "Policy",
    "RandomElimination",
    "SortingPolicy",
]
