"""Room-and-corridor maps and the grid raycaster behind the scan observation.

Cell ``(row, col)`` spans ``[col, col+1) x [row, row+1)`` with its centre at
``(col + 0.5, row + 0.5)``. Heading 0 points along increasing column and
``pi/2`` along increasing row.
"""

from __future__ import annotations

import logging
import math
from typing import Optional

import numpy as np

from app_core.errors import ArgumentError, GenerationError
from numkit.rng import Rng

from .config import LocalizeConfig
from .types import GridMap

logger = logging.getLogger(__name__)

# directions are snapped so that axis-aligned and diagonal beams are exact
_DIRECTION_DECIMALS = 12


def beam_directions(heading: float, beams: int) -> np.ndarray:
    """Unit ``(dcol, drow)`` for ``beams`` evenly spaced headings starting at ``heading``."""

    angles = heading + 2.0 * math.pi * np.arange(beams) / beams
    return np.stack(
        [np.round(np.cos(angles), _DIRECTION_DECIMALS), np.round(np.sin(angles), _DIRECTION_DECIMALS)],
        axis=1,
    )


def _cast(grid: GridMap, row: int, col: int, dcol: float, drow: float) -> float:
    step_c = 1 if dcol > 0 else -1
    step_r = 1 if drow > 0 else -1
    delta_c = math.inf if dcol == 0 else 1.0 / abs(dcol)
    delta_r = math.inf if drow == 0 else 1.0 / abs(drow)
    # the ray starts at the cell centre, half a cell from either boundary
    t_c = 0.5 * delta_c
    t_r = 0.5 * delta_r
    c, r = col, row
    while True:
        if t_c < t_r:
            c += step_c
            t_c += delta_c
        elif t_r < t_c:
            r += step_r
            t_r += delta_r
        else:
            c += step_c
            r += step_r
            t_c += delta_c
            t_r += delta_r
        if not (0 <= r < grid.height and 0 <= c < grid.width):
            raise GenerationError(f"ray from {(row, col)} left the map; boundary is not closed")
        if grid.occupancy[r, c]:
            return math.hypot(r - row, c - col)


def raycast(grid: GridMap, row: int, col: int, heading: float, beams: int) -> np.ndarray:
    """Range in cells from the pose cell centre to the centre of the first occupied cell, per beam."""

    if beams < 1:
        raise ArgumentError(f"beams must be >= 1, got {beams}")
    if not grid.is_free(row, col):
        raise ArgumentError(f"pose {(row, col)} is not a free cell")
    directions = beam_directions(heading, beams)
    return np.array([_cast(grid, row, col, dc, dr) for dc, dr in directions], dtype=np.float64)


def empty_map(height: int, width: int) -> GridMap:
    occ = np.zeros((height, width), dtype=bool)
    occ[0, :] = occ[-1, :] = True
    occ[:, 0] = occ[:, -1] = True
    return GridMap(occ)


def build_map(config: LocalizeConfig, rng: Rng) -> GridMap:
    """Closed rectangle split by full-length interior walls with doorways, plus block obstacles."""

    height, width = config.height, config.width
    occ = np.array(empty_map(height, width).occupancy)

    for _ in range(config.interior_walls):
        if rng.uniform() < 0.5:
            row = 2 + rng.integers(height - 4)
            occ[row, 1:-1] = True
            door = 1 + rng.integers(max(1, width - 1 - config.door_width))
            occ[row, door : door + config.door_width] = False
        else:
            col = 2 + rng.integers(width - 4)
            occ[1:-1, col] = True
            door = 1 + rng.integers(max(1, height - 1 - config.door_width))
            occ[door : door + config.door_width, col] = False

    for _ in range(config.obstacles):
        size_r = 1 + rng.integers(2)
        size_c = 1 + rng.integers(2)
        row = 1 + rng.integers(height - 2 - size_r)
        col = 1 + rng.integers(width - 2 - size_c)
        occ[row : row + size_r, col : col + size_c] = True

    occ[0, :] = occ[-1, :] = True
    occ[:, 0] = occ[:, -1] = True
    if occ.all():
        raise GenerationError("map generator left no free cell")
    return GridMap(occ)


def build_map_pool(config: LocalizeConfig) -> list[GridMap]:
    """The ``num_maps`` maps every localization instance of this config draws from."""

    base = Rng(config.map_seed).fork("localize-maps")
    pool = []
    for index in range(config.num_maps):
        stream = base.fork(index)
        for attempt in range(config.max_attempts):
            try:
                pool.append(build_map(config, stream))
                break
            except GenerationError:
                logger.debug("map %d attempt %d produced no free cell", index, attempt)
        else:
            raise GenerationError(f"could not build map {index} in {config.max_attempts} attempts")
    return pool


def max_range(grid: GridMap) -> float:
    return math.hypot(grid.height, grid.width)


def neighbourhood_box(row: int, col: int, k: int, shape: tuple[int, int]) -> tuple[slice, slice]:
    """Slices of the k×k box centred at ``(row, col)``, clipped to the map."""

    half = k // 2
    height, width = shape
    return (
        slice(max(0, row - half), min(height, row + half + 1)),
        slice(max(0, col - half), min(width, col + half + 1)),
    )


def scan_with_noise(ranges: np.ndarray, noise: float, rng: Optional[Rng]) -> np.ndarray:
    if noise == 0.0 or rng is None:
        return ranges
    return np.maximum(ranges + rng.normal_array(ranges.shape, scale=noise), 0.0)


__all__ = [
    "beam_directions",
    "build_map",
    "build_map_pool",
    "empty_map",
    "max_range",
    "neighbourhood_box",
    "raycast",
    "scan_with_noise",
]
