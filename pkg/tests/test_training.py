import numpy as np
import pytest

from app_core.errors import ArgumentError, ConsistencyError, ContractError, DimensionError
from episode import AssessmentOutcome, EpisodeConfig, run_episode
from numkit.rng import Rng
from policies.registry import build_policy, failure_aware_spec
from policies.weights import init_base_weights, init_failure_aware_weights
from training.bc import BCDataset, accuracy, train_bc
from training.config import TrainConfig
from training.dqn import DQNTrainer, binary_reward, bootstrap_targets, dqn_train, q_targets
from training.replay import ReplayBuffer, Transition


def _transition(reward, terminal, next_memory=(1.0, 1.0, 1.0)):
    return Transition(
        observation=np.ones(3),
        memories=(np.array([0.0, 1.0, 1.0]),),
        action=1,
        reward=reward,
        terminal=terminal,
        next_memory=np.asarray(next_memory),
    )


def _toy_dqn_config(**overrides):
    values = dict(
        optimizer="adam",
        lr=1e-2,
        loss="smooth-L1",
        gamma=0.2,
        max_trials=4,
        episodes=300,
        epsilon_decay_episodes=150,
        batch_size=16,
        buffer_capacity=2000,
        target_update=20,
        log_every=50,
        seed=0,
    )
    values.update(overrides)
    return TrainConfig(**values)


def _targets_weights():
    base = init_base_weights(3, 3, Rng(0), hidden=4)
    return init_failure_aware_weights(base, failure_aware_spec("FMP-1", base), Rng(1))


def _first_rechoice_rate(policy, family, episodes=1000):
    oracle = family.oracle()
    hits = 0
    for instance in family.instances(episodes, seed=123, stream="eval"):
        trace = run_episode(policy, instance, oracle, EpisodeConfig(max_trials=4), Rng(0))
        hits += len(trace.actions) > 1 and trace.actions[1] == 1
    return hits / episodes


# ----------------------------------------------------------------------
# Q targets
# ----------------------------------------------------------------------
def test_terminal_target_is_the_reward():
    targets = q_targets([_transition(1.0, True)], _targets_weights(), 0.2)
    np.testing.assert_array_equal(targets, [1.0])


def test_bootstrap_arithmetic():
    targets = bootstrap_targets(
        rewards=np.array([0.0]),
        terminals=np.array([False]),
        next_q=np.array([[0.5, 0.1, 0.3]]),
        next_memory=np.array([[1.0, 1.0, 1.0]]),
        gamma=0.2,
    )
    assert targets[0] == pytest.approx(0.1)


def test_bootstrap_ignores_failed_actions():
    kwargs = dict(rewards=np.array([0.0]), terminals=np.array([False]), gamma=0.2)
    plain = bootstrap_targets(next_q=np.array([[0.5, 0.1, 0.3]]), next_memory=np.array([[1.0, 0.0, 1.0]]), **kwargs)
    spiked = bootstrap_targets(next_q=np.array([[0.5, 100.0, 0.3]]), next_memory=np.array([[1.0, 0.0, 1.0]]), **kwargs)
    np.testing.assert_array_equal(plain, spiked)


def test_open_transition_without_untried_actions():
    with pytest.raises(ContractError):
        bootstrap_targets(np.zeros(1), np.array([False]), np.zeros((1, 2)), np.zeros((1, 2)), 0.2)


def test_q_targets_on_open_transitions_use_the_network():
    weights = _targets_weights()
    targets = q_targets([_transition(0.0, False, (1.0, 0.0, 1.0))], weights, 0.2)
    assert targets.shape == (1,)
    assert 0.0 <= targets[0] <= 0.2


# ----------------------------------------------------------------------
# Replay buffer
# ----------------------------------------------------------------------
def test_replay_buffer_is_a_ring():
    buffer = ReplayBuffer(3)
    for reward in range(5):
        buffer.push(_transition(float(reward), True))
    assert len(buffer) == 3
    assert min(t.reward for t in buffer.sample(200, Rng(0))) == 2.0
    with pytest.raises(ArgumentError):
        ReplayBuffer(0)
    with pytest.raises(ArgumentError):
        ReplayBuffer(2).sample(1, Rng(0))


# ----------------------------------------------------------------------
# Configuration
# ----------------------------------------------------------------------
def test_task_defaults():
    classify = TrainConfig.for_task("classify")
    assert (classify.optimizer, classify.lr, classify.momentum, classify.loss) == ("sgd-momentum", 1e-4, 0.9, "L1")
    assert classify.weight_decay == 2.0**-5
    assert classify.gamma == 0.2
    correlated = TrainConfig.for_task("correlated")
    assert correlated.betas == (0.9, 0.99)
    assert correlated.reward_bonus == 0.1
    assert TrainConfig.for_task("localize").lr == 1e-3


def test_epsilon_schedule():
    cfg = TrainConfig(episodes=100, epsilon_start=1.0, epsilon_end=0.05)
    assert cfg.epsilon_at(0) == 1.0
    assert cfg.epsilon_at(25) == pytest.approx(0.525)
    assert cfg.epsilon_at(50) == 0.05
    assert cfg.epsilon_at(99) == 0.05


def test_invalid_train_config():
    with pytest.raises(ArgumentError):
        TrainConfig(gamma=1.0).validate_ranges()
    with pytest.raises(ArgumentError):
        TrainConfig(epsilon_end=1.5).validate_ranges()


# ----------------------------------------------------------------------
# Behavior cloning
# ----------------------------------------------------------------------
def test_bc_zero_learning_rate_leaves_weights_unchanged(small_classify, small_base):
    dataset = BCDataset.from_family(small_classify, 64, seed=0)
    result = train_bc(small_base, dataset, TrainConfig(lr=0.0, epochs=2))
    assert result.weights.params.equal(small_base.params)


def test_bc_overfits_a_small_set(small_classify, small_base):
    dataset = BCDataset.from_family(small_classify, 32, seed=1)
    cfg = TrainConfig(optimizer="adam", lr=1e-2, loss="cross-entropy", epochs=200, bc_batch_size=8, validation_fraction=0.0)
    result = train_bc(small_base, dataset, cfg)
    assert result.train_accuracy >= 0.99
    assert result.losses[-1] < result.losses[0]
    assert result.val_accuracy is None


def test_bc_is_deterministic(small_classify, small_base):
    dataset = BCDataset.from_family(small_classify, 40, seed=2)
    cfg = TrainConfig(lr=1e-3, loss="cross-entropy", epochs=3, bc_batch_size=8)
    assert train_bc(small_base, dataset, cfg).losses == train_bc(small_base, dataset, cfg).losses


def test_bc_rejects_empty_and_mismatched_data(small_base):
    with pytest.raises(ArgumentError):
        BCDataset.from_records([])
    dataset = BCDataset(np.ones((4, small_base.spec.observation_dim)), np.ones((4, small_base.action_count + 1)))
    with pytest.raises(DimensionError):
        train_bc(small_base, dataset, TrainConfig(epochs=1))


def test_bc_reaches_high_accuracy_on_separable_classes(small_classify, small_base):
    train = BCDataset.from_family(small_classify, 600, seed=3)
    held_out = BCDataset.from_family(small_classify, 1000, seed=4)
    cfg = TrainConfig(optimizer="adam", lr=1e-2, loss="cross-entropy", epochs=30, bc_batch_size=32)
    result = train_bc(small_base, train, cfg)
    assert accuracy(result.weights, held_out) >= 0.95


# ----------------------------------------------------------------------
# DQN
# ----------------------------------------------------------------------
def test_reward_contract(toy_family, toy_base):
    weights = init_failure_aware_weights(toy_base, failure_aware_spec("FMP-1", toy_base), Rng(0))
    trainer = DQNTrainer(weights, toy_family, _toy_dqn_config(), Rng(0), reward_fn=lambda outcome: 0.5)
    with pytest.raises(ContractError):
        trainer.reward(AssessmentOutcome(True))
    assert binary_reward(AssessmentOutcome(True)) == 1.0
    assert binary_reward(AssessmentOutcome(False)) == 0.0


def test_reward_bonus_on_cost_bearing_pass(toy_family, toy_base):
    weights = init_failure_aware_weights(toy_base, failure_aware_spec("FMP-1", toy_base), Rng(0))
    trainer = DQNTrainer(weights, toy_family, _toy_dqn_config(reward_bonus=0.1), Rng(0))
    assert trainer.reward(AssessmentOutcome(True, 50.0)) == pytest.approx(1.2)
    assert trainer.reward(AssessmentOutcome(False, float("inf"))) == 0.0


def test_dqn_requires_frozen_shared_partition(toy_family, toy_base):
    weights = init_failure_aware_weights(toy_base, failure_aware_spec("FMP-1", toy_base), Rng(0))
    thawed = weights.with_params(weights.params.with_trainable({name: True for name in weights.shared_partition}))
    with pytest.raises(ConsistencyError):
        DQNTrainer(thawed, toy_family, _toy_dqn_config(), Rng(0))
    with pytest.raises(ArgumentError):
        DQNTrainer(toy_base, toy_family, _toy_dqn_config(), Rng(0))


def test_dqn_keeps_frozen_parameters_bitwise(toy_family, toy_base):
    weights = init_failure_aware_weights(toy_base, failure_aware_spec("FMP-1", toy_base), Rng(0))
    result = dqn_train(weights, toy_family, _toy_dqn_config(episodes=40), Rng(5))
    assert result.updates > 0
    for name in weights.shared_partition:
        assert result.weights.params[name].tobytes() == weights.params[name].tobytes()
    changed = [n for n in weights.params.trainable_names if not np.array_equal(result.weights.params[n], weights.params[n])]
    assert changed


def test_dqn_is_deterministic_per_seed(toy_family, toy_base):
    weights = init_failure_aware_weights(toy_base, failure_aware_spec("FMP-1", toy_base), Rng(0))
    cfg = _toy_dqn_config(episodes=30)
    a = dqn_train(weights, toy_family, cfg, Rng(9))
    b = dqn_train(weights, toy_family, cfg, Rng(9))
    assert a.weights.params.equal(b.weights.params)
    assert a.reward_curve == b.reward_curve


def test_fmp1_learns_the_always_passing_action(toy_family, toy_base):
    # sorting alone would re-choose action 2 after action 0 fails
    sp = build_policy("SP", toy_family.action_count, base=toy_base)
    assert _first_rechoice_rate(sp, toy_family, episodes=10) == 0.0

    weights = init_failure_aware_weights(toy_base, failure_aware_spec("FMP-1", toy_base), Rng(0))
    result = dqn_train(weights, toy_family, _toy_dqn_config(), Rng(1))
    policy = build_policy("FMP-1", toy_family.action_count, base=toy_base, weights=result.weights)
    assert _first_rechoice_rate(policy, toy_family) >= 0.99


@pytest.mark.slow
def test_fmp2_learns_the_always_passing_action(toy_family, toy_base):
    weights = init_failure_aware_weights(toy_base, failure_aware_spec("FMP-2", toy_base), Rng(0))
    result = dqn_train(weights, toy_family, _toy_dqn_config(episodes=500, epsilon_decay_episodes=250), Rng(2))
    policy = build_policy("FMP-2", toy_family.action_count, base=toy_base, weights=result.weights)
    assert _first_rechoice_rate(policy, toy_family) >= 0.99
