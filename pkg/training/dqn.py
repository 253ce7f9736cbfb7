"""Value-based training of the failure-aware policies.

Each episode replays the invariant-observation loop: a₀ from π₀ (or from the
recurrent policy itself when it emits its first action), then epsilon-greedy
re-choices over untried actions. Every learned re-choice is one transition;
passing, exhausting the trial budget and running out of actions are terminal.
The π₀ partition stays frozen throughout.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from app_core.errors import ArgumentError, ConsistencyError, ContractError
from episode.state_manager import init_memory, update_memory
from episode.types import AssessmentOutcome, FailureMemory
from logs.run_logger import RunLogger
from numkit.layers import take_along_actions
from numkit.losses import loss as loss_fn
from numkit.optim import Optimizer
from numkit.rng import Rng
from numkit.tape import ArrayLike, GradientTape, value_of
from policies.networks import ArchitectureSpec, fmp1_q, fmp2_q_unrolled
from policies.selectors import base_forward, masked_argmax, select_random, select_sorting
from policies.weights import PolicyWeights
from tasks.families import TaskFamily

from .config import TrainConfig
from .replay import ReplayBuffer, Transition

logger = logging.getLogger(__name__)

RewardAdapter = Callable[[AssessmentOutcome], float]


def binary_reward(outcome: AssessmentOutcome) -> float:
    return 1.0 if outcome.passed else 0.0


@dataclass
class DQNResult:
    weights: PolicyWeights
    reward_curve: list[float] = field(default_factory=list)
    loss_curve: list[float] = field(default_factory=list)
    success_rate: Optional[float] = None
    updates: int = 0


# ----------------------------------------------------------------------
# Q-values over batches of states
# ----------------------------------------------------------------------
def batch_q(
    params: Mapping[str, ArrayLike],
    spec: ArchitectureSpec,
    observations: np.ndarray,
    memory_seqs: Sequence[Sequence[np.ndarray]],
) -> ArrayLike:
    """Q-values (B, N) for states given as (observation, fed memory sequence)."""

    observations = np.asarray(observations, dtype=np.float64)
    if spec.architecture == "fmp1":
        if any(len(seq) == 0 for seq in memory_seqs):
            raise ContractError("fmp1 states need the current memory")
        current = np.stack([np.asarray(seq[-1], dtype=np.float64) for seq in memory_seqs])
        return fmp1_q(observations, current, params, spec)
    if spec.architecture == "fmp2":
        lengths = np.array([len(seq) for seq in memory_seqs], dtype=np.int64)
        width = spec.action_count
        padded = np.zeros((len(memory_seqs), int(lengths.max(initial=0)), width))
        for row, seq in enumerate(memory_seqs):
            for step, memory in enumerate(seq):
                padded[row, step] = memory
        return fmp2_q_unrolled(observations, padded, lengths, params)
    raise ArgumentError(f"no Q-network for architecture {spec.architecture!r}")


def bootstrap_targets(
    rewards: np.ndarray,
    terminals: np.ndarray,
    next_q: np.ndarray,
    next_memory: np.ndarray,
    gamma: float,
) -> np.ndarray:
    """``r`` for terminal rows, ``r + γ·max_{a': m'>0} Q'(a')`` otherwise."""

    rewards = np.asarray(rewards, dtype=np.float64)
    terminals = np.asarray(terminals, dtype=bool)
    next_q = np.asarray(next_q, dtype=np.float64)
    live = np.asarray(next_memory, dtype=np.float64) > 0.0
    targets = rewards.copy()
    for row in np.flatnonzero(~terminals):
        if not live[row].any():
            raise ContractError(f"non-terminal transition {row} has no untried action left")
        targets[row] += gamma * float(np.max(next_q[row][live[row]]))
    return targets


def q_targets(
    batch: Sequence[Transition],
    target_weights: PolicyWeights,
    gamma: float,
) -> np.ndarray:
    if not batch:
        raise ArgumentError("q_targets over an empty batch")
    rewards = np.array([t.reward for t in batch])
    terminals = np.array([t.terminal for t in batch])
    next_memory = np.stack([t.next_memory for t in batch])
    next_q = np.zeros_like(next_memory)
    open_rows = np.flatnonzero(~terminals)
    if open_rows.size:
        q = batch_q(
            target_weights.params,
            target_weights.spec,
            np.stack([batch[row].observation for row in open_rows]),
            [batch[row].next_memories for row in open_rows],
        )
        next_q[open_rows] = value_of(q)
    return bootstrap_targets(rewards, terminals, next_q, next_memory, gamma)


# ----------------------------------------------------------------------
# Training loop
# ----------------------------------------------------------------------
class DQNTrainer:
    """Holds the online/target weights, optimizer and replay buffer of one run."""

    def __init__(
        self,
        weights: PolicyWeights,
        family: TaskFamily,
        cfg: TrainConfig,
        rng: Rng,
        *,
        reward_fn: RewardAdapter = binary_reward,
        run_logger: Optional[RunLogger] = None,
    ) -> None:
        cfg.validate_ranges()
        if weights.architecture not in ("fmp1", "fmp2"):
            raise ArgumentError(f"DQN trains fmp1/fmp2 weights, got {weights.architecture!r}")
        if weights.action_count != family.action_count:
            raise ArgumentError(
                f"decoder width {weights.action_count} does not match the task's {family.action_count} actions"
            )
        unfrozen = [name for name in weights.shared_partition if weights.params.is_trainable(name)]
        if unfrozen:
            raise ConsistencyError(f"shared parameters must be frozen before DQN: {unfrozen}")
        if not weights.params.trainable_names:
            raise ArgumentError(f"{weights.architecture} weights have no trainable parameter")

        self.cfg = cfg
        self.family = family
        self.oracle = family.oracle()
        self.reward_fn = reward_fn
        self.run_logger = run_logger
        self.initial = weights
        self.online = weights
        self.target = weights
        self.optimizer = Optimizer(cfg.optimizer_config())
        self.buffer = ReplayBuffer(cfg.buffer_capacity)
        self.instance_rng = rng.fork("instances")
        self.explore_rng = rng.fork("explore")
        self.replay_rng = rng.fork("replay")
        self.steps = 0
        self.updates = 0

    def reward(self, outcome: AssessmentOutcome) -> float:
        base = self.reward_fn(outcome)
        if base not in (0.0, 1.0):
            raise ContractError(f"oracle reward adapter returned {base!r}, expected 0 or 1")
        if outcome.passed and self.cfg.reward_bonus and outcome.cost is not None and outcome.cost > 0:
            base += self.cfg.reward_bonus * 100.0 / outcome.cost
        return base

    def _select(self, observation: np.ndarray, seq: tuple, memory: FailureMemory, epsilon: float) -> int:
        if self.explore_rng.uniform() < epsilon:
            return select_random(memory, self.explore_rng)
        q = value_of(batch_q(self.online.params, self.online.spec, observation[None, :], [seq]))[0]
        return masked_argmax(q, memory)

    def run_episode(self, index: int, epsilon: float) -> tuple[float, bool, list[float]]:
        instance = self.family.generate(self.instance_rng.fork(index), instance_id=index)
        observation = instance.observation
        affordance = base_forward(observation, self.online)
        memory = init_memory(self.cfg.memory_mode, affordance, instance.action_count)
        grid_shape = instance.grid_shape
        seq: tuple = ()
        losses: list[float] = []

        trial = 0
        if not (self.online.architecture == "fmp2" and self.online.spec.emit_first):
            action = select_sorting(affordance, memory)
            outcome = self.oracle(instance, action)
            trial = 1
            if outcome.passed:
                return self.reward(outcome), True, losses
            memory = update_memory(memory, action, radius=self.cfg.memory_radius, grid_shape=grid_shape)
            if not memory.has_candidates() or trial >= self.cfg.max_trials:
                return 0.0, False, losses

        episode_reward = 0.0
        while trial < self.cfg.max_trials:
            if self.online.architecture == "fmp2" and trial == 0:
                state = seq
            else:
                state = seq + (memory.values,)
            action = self._select(observation, state, memory, epsilon)
            outcome = self.oracle(instance, action)
            reward = self.reward(outcome)
            episode_reward += reward
            trial += 1
            next_memory = memory if outcome.passed else update_memory(
                memory, action, radius=self.cfg.memory_radius, grid_shape=grid_shape
            )
            terminal = outcome.passed or trial >= self.cfg.max_trials or not next_memory.has_candidates()
            self.buffer.push(Transition(observation, state, action, reward, terminal, next_memory.values))
            self.steps += 1
            update_loss = self.learn()
            if update_loss is not None:
                losses.append(update_loss)
            if self.steps % self.cfg.target_update == 0:
                self.target = self.online
            memory = next_memory
            seq = state
            if terminal:
                return episode_reward, outcome.passed, losses
        return episode_reward, False, losses

    def learn(self) -> Optional[float]:
        if len(self.buffer) < self.cfg.batch_size:
            return None
        batch = self.buffer.sample(self.cfg.batch_size, self.replay_rng)
        targets = q_targets(batch, self.target, self.cfg.gamma)
        params = self.online.params
        tape = GradientTape()
        view = tape.watch_params(params)
        q = batch_q(view, self.online.spec, np.stack([t.observation for t in batch]), [t.memories for t in batch])
        chosen = take_along_actions(q, np.array([t.action for t in batch]))
        out = loss_fn(self.cfg.loss, chosen, targets)
        grads = tape.gradient(out, view)
        self.online = self.online.with_params(self.optimizer.step(params, grads))
        self.updates += 1
        return float(value_of(out))

    def train(self) -> DQNResult:
        cfg = self.cfg
        reward_curve: list[float] = []
        loss_curve: list[float] = []
        window_rewards: list[float] = []
        window_losses: list[float] = []
        successes = 0
        for episode in range(cfg.episodes):
            epsilon = cfg.epsilon_at(episode)
            reward, passed, losses = self.run_episode(episode, epsilon)
            successes += int(passed)
            window_rewards.append(reward)
            window_losses.extend(losses)
            if (episode + 1) % cfg.log_every == 0 or episode + 1 == cfg.episodes:
                mean_reward = float(np.mean(window_rewards))
                mean_loss = float(np.mean(window_losses)) if window_losses else None
                reward_curve.append(mean_reward)
                if mean_loss is not None:
                    loss_curve.append(mean_loss)
                if self.run_logger is not None:
                    self.run_logger.log_episode_window(episode + 1, epsilon, mean_reward, mean_loss)
                window_rewards, window_losses = [], []

        shared = self.initial.shared_partition
        for name in shared:
            if self.online.params[name].tobytes() != self.initial.params[name].tobytes():
                raise ConsistencyError(f"frozen parameter {name!r} changed during training")
        rate = successes / cfg.episodes if cfg.episodes else None
        logger.info("DQN done: %d episodes, %d updates, training success %.4f", cfg.episodes, self.updates, rate or math.nan)
        return DQNResult(
            weights=self.online,
            reward_curve=reward_curve,
            loss_curve=loss_curve,
            success_rate=rate,
            updates=self.updates,
        )


def dqn_train(
    weights: PolicyWeights,
    family: TaskFamily,
    cfg: TrainConfig,
    rng: Rng,
    *,
    reward_fn: RewardAdapter = binary_reward,
    run_logger: Optional[RunLogger] = None,
) -> DQNResult:
    return DQNTrainer(weights, family, cfg, rng, reward_fn=reward_fn, run_logger=run_logger).train()


__all__ = [
    "DQNResult",
    "DQNTrainer",
    "RewardAdapter",
    "batch_q",
    "binary_reward",
    "bootstrap_targets",
    "dqn_train",
    "q_targets",
]
