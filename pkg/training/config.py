"""Training hyperparameters and the per-task defaults."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict

from app_core.errors import ArgumentError
from episode.types import EpisodeConfig, MemoryMode
from numkit.losses import LOSS_KINDS, LossKind
from numkit.optim import OptimizerConfig, OptimizerKind


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    # optimizer
    optimizer: OptimizerKind = "adam"
    lr: float = 1e-4
    weight_decay: float = 0.0
    momentum: float = 0.9
    betas: tuple[float, float] = (0.9, 0.99)
    eps: float = 1e-8
    loss: LossKind = "smooth-L1"

    # DQN
    gamma: float = 0.2
    max_trials: int = 5
    memory_mode: MemoryMode = "binary"
    memory_radius: int = 0
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    # defaults to half of the episodes
    epsilon_decay_episodes: Optional[int] = None
    buffer_capacity: int = 10_000
    batch_size: int = 64
    target_update: int = 500
    episodes: int = 2000
    # λ in r = 1 + λ·100/cost on a passing cost-bearing action
    reward_bonus: float = 0.0
    log_every: int = 100

    # behavior cloning
    epochs: int = 50
    bc_batch_size: int = 32
    validation_fraction: float = 0.1

    seed: int = 0

    def validate_ranges(self) -> None:
        if not 0.0 <= self.gamma < 1.0:
            raise ArgumentError(f"gamma must lie in [0, 1), got {self.gamma}")
        for name in ("epsilon_start", "epsilon_end"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ArgumentError(f"{name} must lie in [0, 1], got {value}")
        if self.loss not in LOSS_KINDS:
            raise ArgumentError(f"unknown loss kind {self.loss!r}")
        positive = ("max_trials", "buffer_capacity", "batch_size", "target_update", "log_every", "bc_batch_size")
        for name in positive:
            if getattr(self, name) < 1:
                raise ArgumentError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.episodes < 0 or self.epochs < 0:
            raise ArgumentError("episodes and epochs must be non-negative")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ArgumentError(f"validation_fraction must lie in [0, 1), got {self.validation_fraction}")
        if self.reward_bonus < 0:
            raise ArgumentError("reward_bonus must be non-negative")
        self.optimizer_config()

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(
            kind=self.optimizer,
            lr=self.lr,
            weight_decay=self.weight_decay,
            momentum=self.momentum,
            betas=self.betas,
            eps=self.eps,
        )

    def episode_config(self) -> EpisodeConfig:
        return EpisodeConfig(
            max_trials=self.max_trials, memory_mode=self.memory_mode, memory_radius=self.memory_radius
        )

    def epsilon_at(self, episode: int) -> float:
        """Linear decay from ``epsilon_start`` to ``epsilon_end``, then constant."""

        horizon = self.epsilon_decay_episodes
        if horizon is None:
            horizon = max(1, self.episodes // 2)
        if horizon <= 0 or episode >= horizon:
            return self.epsilon_end
        fraction = episode / horizon
        return self.epsilon_start + fraction * (self.epsilon_end - self.epsilon_start)

    @classmethod
    def for_task(cls, kind: str, stage: Literal["bc", "fa"] = "fa", **overrides) -> "TrainConfig":
        try:
            defaults = dict(_DEFAULTS[stage][kind])
        except KeyError:
            raise ArgumentError(f"no training defaults for stage {stage!r}, task {kind!r}") from None
        defaults.update(overrides)
        return cls(**defaults)


_BC = {"optimizer": "adam", "lr": 1e-3, "weight_decay": 0.0, "loss": "cross-entropy", "epochs": 50}

_DEFAULTS: dict[str, dict[str, dict]] = {
    "bc": {"classify": _BC, "correlated": _BC, "localize": _BC},
    "fa": {
        "classify": {
            "optimizer": "sgd-momentum",
            "lr": 1e-4,
            "momentum": 0.9,
            "weight_decay": 2.0**-5,
            "loss": "L1",
        },
        "correlated": {
            "optimizer": "adam",
            "lr": 1e-4,
            "weight_decay": 2.0**-5,
            "betas": (0.9, 0.99),
            "loss": "smooth-L1",
            "reward_bonus": 0.1,
        },
        "localize": {
            "optimizer": "adam",
            "lr": 1e-3,
            "weight_decay": 2.0**-6,
            "loss": "smooth-L1",
        },
    },
}


__all__ = ["TrainConfig"]
