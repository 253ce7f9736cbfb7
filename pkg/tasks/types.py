"""Task instances and the hidden ground truth behind them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional, Union

import numpy as np

from app_core.errors import ArgumentError, GenerationError
from numkit.params import as_array

TaskKind = Literal["classify", "correlated", "localize"]

FREE = "."
WALL = "#"


@dataclass(frozen=True)
class GridMap:
    """Boolean occupancy grid indexed ``[row, col]``; ``True`` is occupied."""

    occupancy: np.ndarray

    def __post_init__(self) -> None:
        occ = np.array(self.occupancy, dtype=bool)
        if occ.ndim != 2:
            raise ArgumentError(f"occupancy must be 2-D, got shape {occ.shape}")
        border = np.concatenate([occ[0], occ[-1], occ[:, 0], occ[:, -1]])
        if not border.all():
            raise GenerationError("map boundary cells must all be occupied")
        if occ.all():
            raise GenerationError("map has no free cell")
        occ.setflags(write=False)
        object.__setattr__(self, "occupancy", occ)

    @property
    def height(self) -> int:
        return int(self.occupancy.shape[0])

    @property
    def width(self) -> int:
        return int(self.occupancy.shape[1])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def is_free(self, row: int, col: int) -> bool:
        return 0 <= row < self.height and 0 <= col < self.width and not self.occupancy[row, col]

    def free_cells(self) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(~self.occupancy)
        return [(int(r), int(c)) for r, c in zip(rows, cols)]

    def to_rows(self) -> list[str]:
        return ["".join(WALL if cell else FREE for cell in row) for row in self.occupancy]

    @classmethod
    def from_rows(cls, rows: list[str]) -> "GridMap":
        if not rows or len({len(row) for row in rows}) != 1:
            raise ArgumentError("map rows must be non-empty and of equal length")
        return cls(np.array([[ch == WALL for ch in row] for row in rows], dtype=bool))


@dataclass(frozen=True)
class CostTable:
    """Per-action cost; finite exactly for feasible actions."""

    costs: np.ndarray

    def __post_init__(self) -> None:
        costs = as_array(self.costs)
        if np.any(np.isnan(costs)) or np.any(costs < 0):
            raise ArgumentError("costs must be non-negative or infinite")
        object.__setattr__(self, "costs", costs)

    @property
    def feasible(self) -> np.ndarray:
        return np.isfinite(self.costs)

    def cost(self, action: int) -> float:
        return float(self.costs[action])


@dataclass(frozen=True)
class ClassifyTruth:
    label: int


@dataclass(frozen=True)
class CorrelatedTruth:
    costs: CostTable
    # smoothed latent field the feasibility threshold was applied to
    field: np.ndarray

    @property
    def feasible(self) -> np.ndarray:
        return self.costs.feasible


@dataclass(frozen=True)
class LocalizeTruth:
    row: int
    col: int
    heading: float
    map_index: int

    @property
    def cell(self) -> tuple[int, int]:
        return (self.row, self.col)


Truth = Union[ClassifyTruth, CorrelatedTruth, LocalizeTruth]


@dataclass(frozen=True)
class TaskInstance:
    """One task draw. ``truth`` is for the oracle only; policies see ``observation``."""

    kind: TaskKind
    observation: np.ndarray
    truth: Truth
    action_count: int
    instance_id: Optional[int] = None
    grid: Optional[GridMap] = None
    scan: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        observation = as_array(self.observation)
        if self.action_count < 1:
            raise ArgumentError(f"action_count must be >= 1, got {self.action_count}")
        object.__setattr__(self, "observation", observation)

    @property
    def grid_shape(self) -> Optional[tuple[int, int]]:
        return None if self.grid is None else self.grid.shape


__all__ = [
    "ClassifyTruth",
    "CorrelatedTruth",
    "CostTable",
    "GridMap",
    "LocalizeTruth",
    "TaskInstance",
    "TaskKind",
    "Truth",
]
