"""Fixed-capacity ring buffer of re-decision transitions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from app_core.errors import ArgumentError
from numkit.rng import Rng


@dataclass(frozen=True)
class Transition:
    """One learned re-decision.

    ``memories`` holds the memory vectors fed to the policy so far (the last
    one is the current memory); the next state appends ``next_memory``.
    """

    observation: np.ndarray
    memories: tuple[np.ndarray, ...]
    action: int
    reward: float
    terminal: bool
    next_memory: np.ndarray

    @property
    def next_memories(self) -> tuple[np.ndarray, ...]:
        return self.memories + (self.next_memory,)


class ReplayBuffer:
    def __init__(self, capacity: int) -> None:
        if capacity < 1:
            raise ArgumentError(f"replay capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._items: list[Transition] = []
        self._cursor = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, transition: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(transition)
        else:
            self._items[self._cursor] = transition
        self._cursor = (self._cursor + 1) % self.capacity

    def sample(self, batch_size: int, rng: Rng) -> list[Transition]:
        """Uniform draw with replacement over the stored transitions."""

        if not self._items:
            raise ArgumentError("cannot sample from an empty replay buffer")
        return [self._items[rng.integers(len(self._items))] for _ in range(batch_size)]


__all__ = ["ReplayBuffer", "Transition"]
