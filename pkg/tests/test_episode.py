from types import SimpleNamespace

import numpy as np
import pytest

from app_core.errors import ArgumentError, ExhaustedActionsError, ProtocolViolationError
from episode import (
    AffordanceMap,
    AssessmentOutcome,
    EpisodeConfig,
    EpisodeEngine,
    EpisodeTrace,
    FailureMemory,
    StateManager,
    init_memory,
    run_episode,
    update_memory,
)
from episode.state_manager import neighbourhood
from episode.types import EpisodeStep, INFINITE_COST
from numkit.rng import Rng
from policies.policy import RandomElimination, SortingPolicy
from policies.selectors import PolicyState


def _instance(n, obs_dim=3, grid_shape=None):
    return SimpleNamespace(observation=np.ones(obs_dim), action_count=n, instance_id=7, grid_shape=grid_shape)


def _always(passed):
    return lambda instance, action: AssessmentOutcome(passed)


class ScriptedPolicy:
    """Returns a fixed sequence of actions regardless of memory."""

    name = "scripted"

    def __init__(self, actions):
        self.actions = list(actions)

    def reset(self, observation):
        return None, PolicyState()

    def select(self, observation, memory, state, rng):
        return self.actions[state.trial_index], state.advanced()


# ----------------------------------------------------------------------
# Memory
# ----------------------------------------------------------------------
def test_init_memory_binary_and_normalized():
    np.testing.assert_array_equal(init_memory("binary", n=3).values, [1.0, 1.0, 1.0])
    aff = AffordanceMap(np.array([0.2, 0.3, 0.5]))
    np.testing.assert_array_equal(init_memory("normalized", aff).values, [0.2, 0.3, 0.5])


def test_init_memory_degenerate():
    with pytest.raises(ArgumentError):
        init_memory("binary", n=0)
    with pytest.raises(ArgumentError):
        init_memory("normalized", n=3)


def test_update_memory_zeroes_and_is_idempotent():
    memory = init_memory("binary", n=3)
    once = update_memory(memory, 1)
    np.testing.assert_array_equal(once.values, [1.0, 0.0, 1.0])
    np.testing.assert_array_equal(update_memory(once, 1).values, once.values)
    # the input is a value and stays unchanged
    np.testing.assert_array_equal(memory.values, [1.0, 1.0, 1.0])


def test_update_memory_bounds():
    with pytest.raises(ArgumentError):
        update_memory(init_memory("binary", n=3), 5)


def test_normalized_memory_keeps_non_failed_entries():
    aff = AffordanceMap(np.array([0.1, 0.6, 0.3]))
    memory = update_memory(init_memory("normalized", aff), 1)
    np.testing.assert_array_equal(memory.values, [0.1, 0.0, 0.3])
    assert memory.candidates() == [0, 2]
    assert memory.zero_indices() == [1]


def test_zero_affordance_entry_is_not_a_failure():
    aff = AffordanceMap(np.array([0.0, 0.25, 0.75]))
    memory = init_memory("normalized", aff)
    assert memory.zero_indices() == []
    assert memory.candidates() == [0, 1, 2]
    memory = update_memory(memory, 2)
    assert memory.zero_indices() == [2]
    assert memory.candidates() == [0, 1]


def test_memory_radius_on_grid():
    memory = update_memory(init_memory("binary", n=16), 5, radius=1, grid_shape=(4, 4))
    assert sorted(memory.zero_indices()) == [0, 1, 2, 4, 5, 6, 8, 9, 10]
    corner = neighbourhood(0, 1, (4, 4))
    assert sorted(corner) == [0, 1, 4, 5]


def test_binary_memory_rejects_fractional_entries():
    with pytest.raises(ArgumentError):
        FailureMemory("binary", np.array([1.0, 0.5]))


def test_affordance_map_validation():
    with pytest.raises(ArgumentError):
        AffordanceMap(np.array([0.5, 0.6]))
    with pytest.raises(ArgumentError):
        AffordanceMap(np.array([-0.1, 1.1]))
    assert AffordanceMap.normalized([1.0, 3.0]).argmax() == 1


def test_assessment_outcome_contract():
    AssessmentOutcome(False, INFINITE_COST)
    AssessmentOutcome(True, 12.5)
    with pytest.raises(ArgumentError):
        AssessmentOutcome(False, 3.0)
    with pytest.raises(ArgumentError):
        AssessmentOutcome(True, INFINITE_COST)


def test_trace_consistency():
    steps = (EpisodeStep(0, AssessmentOutcome(False)), EpisodeStep(2, AssessmentOutcome(True)))
    trace = EpisodeTrace(steps, succeeded=True, trials_used=2)
    assert trace.actions == (0, 2)
    assert not trace.has_repeats
    with pytest.raises(ArgumentError):
        EpisodeTrace(steps, succeeded=False, trials_used=2)


# ----------------------------------------------------------------------
# Engine
# ----------------------------------------------------------------------
def test_immediate_success():
    trace = run_episode(RandomElimination(4), _instance(4), _always(True), EpisodeConfig(), Rng(0))
    assert trace.trials_used == 1
    assert trace.succeeded
    assert trace.instance_id == 7


def test_budget_is_respected():
    calls = []

    def oracle(instance, action):
        calls.append(action)
        return AssessmentOutcome(False)

    trace = run_episode(RandomElimination(10), _instance(10), oracle, EpisodeConfig(max_trials=5), Rng(1))
    assert trace.trials_used == 5
    assert not trace.succeeded
    assert len(calls) == 5
    assert not trace.has_repeats


def test_sorting_policy_walks_down_the_affordance(preference_weights):
    weights = preference_weights(np.log([0.5, 0.3, 0.2]), 3)
    oracle = lambda instance, action: AssessmentOutcome(action == 2)
    trace = run_episode(SortingPolicy(3, weights), _instance(3), oracle, EpisodeConfig(), Rng(0))
    assert trace.actions == (0, 1, 2)
    assert trace.succeeded
    assert trace.trials_used == 3


def test_stops_when_every_action_failed():
    trace = run_episode(RandomElimination(3), _instance(3), _always(False), EpisodeConfig(max_trials=10), Rng(2))
    assert trace.trials_used == 3
    assert sorted(trace.actions) == [0, 1, 2]


def test_repeat_of_failed_action_is_a_protocol_violation():
    engine = EpisodeEngine(ScriptedPolicy([1, 1]), _always(False), EpisodeConfig())
    with pytest.raises(ProtocolViolationError):
        engine.run(_instance(3), Rng(0))


def test_out_of_range_action_is_a_protocol_violation():
    with pytest.raises(ProtocolViolationError):
        run_episode(ScriptedPolicy([3]), _instance(3), _always(False), EpisodeConfig(), Rng(0))
    with pytest.raises(ProtocolViolationError):
        run_episode(ScriptedPolicy([0.5]), _instance(3), _always(False), EpisodeConfig(), Rng(0))


def test_policy_action_count_must_match_instance():
    with pytest.raises(ArgumentError):
        run_episode(RandomElimination(4), _instance(3), _always(True), EpisodeConfig(), Rng(0))


def test_normalized_memory_needs_an_affordance():
    with pytest.raises(ArgumentError):
        run_episode(RandomElimination(3), _instance(3), _always(True), EpisodeConfig(memory_mode="normalized"), Rng(0))


def test_radius_removes_neighbours_from_later_trials():
    seen = []

    def oracle(instance, action):
        seen.append(action)
        return AssessmentOutcome(False)

    config = EpisodeConfig(max_trials=20, memory_radius=1)
    trace = run_episode(RandomElimination(25), _instance(25, grid_shape=(5, 5)), oracle, config, Rng(4))
    for i, action in enumerate(seen):
        for earlier in seen[:i]:
            assert action not in neighbourhood(earlier, 1, (5, 5))
    assert trace.trials_used == len(seen)


def test_step_hook_sees_every_step():
    snapshots = []
    run_episode(
        RandomElimination(6),
        _instance(6),
        _always(False),
        EpisodeConfig(max_trials=4),
        Rng(3),
        on_step=lambda state: snapshots.append(len(state["steps"])),
    )
    assert snapshots == [1, 2, 3, 4]


def test_engine_is_deterministic_for_a_seed():
    runs = [
        run_episode(RandomElimination(12), _instance(12), _always(False), EpisodeConfig(), Rng(99)).actions
        for _ in range(2)
    ]
    assert runs[0] == runs[1]


def test_state_manager_records_history():
    state = StateManager.create_initial_state("RE", init_memory("binary", n=2), None, PolicyState())
    StateManager.record_step(state, 1, AssessmentOutcome(False))
    StateManager.record_step(state, 0, AssessmentOutcome(True))
    assert state["trial_index"] == 2
    assert state["succeeded"]
    assert StateManager.failed_actions(state) == [1]
    assert [record["action"] for record in state["history"]] == [1, 0]


def test_exhausted_memory_raises_from_selector():
    from policies.selectors import select_random

    with pytest.raises(ExhaustedActionsError):
        select_random(FailureMemory("binary", np.zeros(2)), Rng(0))
