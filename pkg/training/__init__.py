"""Behavior cloning for π₀ and DQN for the failure-aware policies."""

from .bc import BCDataset, BCResult, accuracy, train_bc
from .config import TrainConfig
from .dqn import DQNResult, DQNTrainer, batch_q, binary_reward, bootstrap_targets, dqn_train, q_targets
from .replay import ReplayBuffer, Transition

__all__ = [
    "BCDataset",
    "BCResult",
    "DQNResult",
    "DQNTrainer",
    "ReplayBuffer",
    "TrainConfig",
    "Transition",
    "accuracy",
    "batch_q",
    "binary_reward",
    "bootstrap_targets",
    "dqn_train",
    "q_targets",
    "train_bc",
]
