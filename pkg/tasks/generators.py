"""Seeded generators for the three task families."""

from __future__ import annotations

import logging
import math
from functools import lru_cache
from statistics import NormalDist

import numpy as np

from app_core.errors import GenerationError
from numkit.rng import Rng

from .config import ClassifyConfig, CorrelatedConfig, LocalizeConfig
from .grid import build_map_pool, max_range, raycast, scan_with_noise
from .types import ClassifyTruth, CorrelatedTruth, CostTable, LocalizeTruth, TaskInstance

logger = logging.getLogger(__name__)


# ----------------------------------------------------------------------
# Classification
# ----------------------------------------------------------------------
@lru_cache(maxsize=32)
def _class_means(config: ClassifyConfig) -> np.ndarray:
    # regular simplex: centred basis vectors of R^C scaled so every pair sits `separation` apart
    C, d = config.classes, config.feature_dim
    vertices = (np.eye(C) - 1.0 / C) * (config.separation / math.sqrt(2.0))
    _, _, vt = np.linalg.svd(vertices)
    coords = vertices @ vt[: C - 1].T
    padded = np.zeros((C, d))
    padded[:, : C - 1] = coords
    rng = Rng(config.means_seed).fork("classify-means")
    rotation, _ = np.linalg.qr(rng.normal_array((d, d)))
    means = padded @ rotation.T
    means.setflags(write=False)
    return means


def class_means(config: ClassifyConfig) -> np.ndarray:
    config.validate_ranges()
    return _class_means(config)


def gen_classification(config: ClassifyConfig, rng: Rng, instance_id: int | None = None) -> TaskInstance:
    config.validate_ranges()
    means = _class_means(config)
    label = rng.integers(config.classes)
    observation = means[label] + rng.normal_array(config.feature_dim, scale=config.noise)
    return TaskInstance(
        kind="classify",
        observation=observation,
        truth=ClassifyTruth(label=label),
        action_count=config.classes,
        instance_id=instance_id,
    )


# ----------------------------------------------------------------------
# Correlated feasibility
# ----------------------------------------------------------------------
def circular_distance(n: int, anchor: int) -> np.ndarray:
    offsets = np.abs(np.arange(n) - anchor)
    return np.minimum(offsets, n - offsets)


def smooth_field(noise: np.ndarray, length: float) -> np.ndarray:
    """Circular Gaussian smoothing, rescaled so each entry has unit variance."""

    if length == 0:
        return np.array(noise)
    n = noise.size
    distance = circular_distance(n, 0).astype(np.float64)
    kernel = np.exp(-0.5 * (distance / length) ** 2)
    field = np.array([np.dot(np.roll(kernel, i), noise) for i in range(n)])
    return field / math.sqrt(float(np.sum(kernel * kernel)))


def feasibility_threshold(fraction: float) -> float:
    return NormalDist().inv_cdf(1.0 - fraction)


def gen_correlated(config: CorrelatedConfig, rng: Rng, instance_id: int | None = None) -> TaskInstance:
    config.validate_ranges()
    n = config.actions
    threshold = feasibility_threshold(config.feasible_fraction)
    for attempt in range(config.max_attempts):
        field = smooth_field(rng.normal_array(n), config.correlation_length)
        feasible = field > threshold
        if feasible.any():
            break
        logger.debug("correlated draw %d had no feasible action; resampling", attempt)
    else:
        raise GenerationError(f"no feasible action after {config.max_attempts} draws")

    anchor = int(np.argmax(field))
    costs = np.where(
        feasible,
        config.base_cost + config.distance_penalty * circular_distance(n, anchor),
        math.inf,
    )
    observation = field + rng.normal_array(n, scale=config.noise)
    return TaskInstance(
        kind="correlated",
        observation=observation,
        truth=CorrelatedTruth(costs=CostTable(costs), field=field),
        action_count=n,
        instance_id=instance_id,
    )


# ----------------------------------------------------------------------
# Localization
# ----------------------------------------------------------------------
@lru_cache(maxsize=16)
def map_pool(config: LocalizeConfig) -> tuple:
    config.validate_ranges()
    return tuple(build_map_pool(config))


def localization_observation(occupancy: np.ndarray, scan: np.ndarray, scale: float) -> np.ndarray:
    """Network input: flattened occupancy (0/1) followed by the scan in units of the map diagonal."""

    return np.concatenate([occupancy.astype(np.float64).reshape(-1), scan / scale])


def gen_localization(config: LocalizeConfig, rng: Rng, instance_id: int | None = None) -> TaskInstance:
    config.validate_ranges()
    pool = map_pool(config)
    map_index = rng.integers(len(pool))
    grid = pool[map_index]
    free = grid.free_cells()
    if not free:
        raise GenerationError(f"map {map_index} has no free cell")
    row, col = free[rng.integers(len(free))]
    heading = 2.0 * math.pi * rng.uniform() if config.random_heading else 0.0
    scan = scan_with_noise(raycast(grid, row, col, heading, config.beams), config.range_noise, rng)
    return TaskInstance(
        kind="localize",
        observation=localization_observation(grid.occupancy, scan, max_range(grid)),
        truth=LocalizeTruth(row=row, col=col, heading=heading, map_index=map_index),
        action_count=config.action_count,
        instance_id=instance_id,
        grid=grid,
        scan=scan,
    )


__all__ = [
    "circular_distance",
    "class_means",
    "feasibility_threshold",
    "gen_classification",
    "gen_correlated",
    "gen_localization",
    "localization_observation",
    "map_pool",
    "smooth_field",
]
