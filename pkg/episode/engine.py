"""Invariant-observation re-decision loop.

One episode: the policy picks an action, the oracle assesses it, a failure
zeroes the action in memory and the loop goes on until a pass, the trial
budget runs out, or no live action is left. The observation is the same
object at every step.
"""

from __future__ import annotations

import logging
from typing import Any, Callable, Optional, Protocol

from app_core.errors import ArgumentError, ExhaustedActionsError, ProtocolViolationError

from .state_manager import EpisodeState, StateManager, init_memory, update_memory
from .types import AssessmentOutcome, EpisodeConfig, EpisodeTrace, RedecisionPolicy

logger = logging.getLogger(__name__)


class TaskInstance(Protocol):
    observation: Any
    action_count: int


Oracle = Callable[[Any, int], AssessmentOutcome]
StepHook = Callable[[EpisodeState], None]


class EpisodeEngine:
    """Runs episodes for one policy/oracle pair under a fixed configuration."""

    def __init__(self, policy: RedecisionPolicy, oracle: Oracle, config: EpisodeConfig) -> None:
        self.policy = policy
        self.oracle = oracle
        self.config = config
        self.state_manager = StateManager()

    def run(self, instance: TaskInstance, rng, *, on_step: Optional[StepHook] = None) -> EpisodeTrace:
        observation = instance.observation
        action_count = int(instance.action_count)
        expected = getattr(self.policy, "action_count", None)
        if expected is not None and expected != action_count:
            raise ArgumentError(
                f"policy {self.policy.name!r} covers {expected} actions, instance has {action_count}"
            )

        affordance, policy_state = self.policy.reset(observation)
        if self.config.memory_mode == "normalized" and affordance is None:
            raise ArgumentError(f"policy {self.policy.name!r} has no π₀ affordance for normalized memory")
        memory = init_memory(self.config.memory_mode, affordance, action_count)
        state = self.state_manager.create_initial_state(self.policy.name, memory, affordance, policy_state)

        while state["transition"] != "done":
            if state["transition"] == "select":
                self._select_node(state, observation, instance, rng)
            elif state["transition"] == "stop_check":
                self._stop_check_node(state)
            if on_step is not None and state["transition"] in ("select", "done") and state["steps"]:
                on_step(state)

        trace = EpisodeTrace(
            steps=tuple(state["steps"]),
            succeeded=state["succeeded"],
            trials_used=len(state["steps"]),
            instance_id=getattr(instance, "instance_id", None),
        )
        logger.debug("episode done: %s", self._summarise_state(state))
        return trace

    # ------------------------------------------------------------------
    # Nodes
    # ------------------------------------------------------------------
    def _select_node(self, state: EpisodeState, observation: Any, instance: TaskInstance, rng) -> None:
        memory = state["memory"]
        try:
            action, policy_state = self.policy.select(observation, memory, state["policy_state"], rng)
        except ExhaustedActionsError:
            logger.error("policy %s found no live action at trial %d", self.policy.name, state["trial_index"])
            raise
        action = self._validate_action(action, state)
        state["policy_state"] = policy_state

        outcome = self.oracle(instance, action)
        self.state_manager.record_step(state, action, outcome)
        if not outcome.passed:
            state["memory"] = update_memory(
                memory,
                action,
                radius=self.config.memory_radius,
                grid_shape=getattr(instance, "grid_shape", None),
            )
        state["transition"] = "stop_check"

    def _stop_check_node(self, state: EpisodeState) -> None:
        if state["succeeded"]:
            state["transition"] = "done"
        elif state["trial_index"] >= self.config.max_trials:
            state["transition"] = "done"
        elif not state["memory"].has_candidates():
            logger.debug("all actions exhausted after %d trials", state["trial_index"])
            state["transition"] = "done"
        else:
            state["transition"] = "select"

    def _validate_action(self, action: Any, state: EpisodeState) -> int:
        memory = state["memory"]
        try:
            index = int(action)
        except (TypeError, ValueError) as exc:
            raise ProtocolViolationError(f"policy {self.policy.name!r} returned non-integer action {action!r}") from exc
        if index != action or not 0 <= index < memory.size:
            raise ProtocolViolationError(
                f"policy {self.policy.name!r} returned action {action!r} outside [0, {memory.size})"
            )
        if memory.values[index] == 0.0:
            state["error"] = f"repeat of failed action {index}"
            raise ProtocolViolationError(
                f"policy {self.policy.name!r} re-selected failed action {index} at trial {state['trial_index']}"
            )
        return index

    @staticmethod
    def _summarise_state(state: EpisodeState) -> dict[str, Any]:
        return {
            "policy": state.get("policy"),
            "trials": state.get("trial_index"),
            "succeeded": state.get("succeeded"),
            "actions": [record["action"] for record in state.get("history", [])],
        }


def run_episode(
    policy: RedecisionPolicy,
    instance: TaskInstance,
    oracle: Oracle,
    config: EpisodeConfig,
    rng,
    *,
    on_step: Optional[StepHook] = None,
) -> EpisodeTrace:
    """Run one episode; see :class:`EpisodeEngine`."""

    return EpisodeEngine(policy, oracle, config).run(instance, rng, on_step=on_step)


__all__ = ["EpisodeEngine", "Oracle", "StepHook", "TaskInstance", "run_episode"]
