"""Shared fixtures: a toy task family, small π₀ weights, temporary run directories."""

from __future__ import annotations

import numpy as np
import pytest
from click.testing import CliRunner

from numkit.rng import Rng
from policies.weights import PolicyWeights, init_base_weights
from tasks.config import ClassifyConfig
from tasks.families import ClassifyFamily
from tasks.types import ClassifyTruth, TaskInstance

TOY_ACTIONS = 4
TOY_OBS_DIM = 3
# π₀ logits of the toy: order of preference 0, 2, 1, 3
TOY_LOGITS = np.array([3.0, 0.0, 1.0, -1.0])


class ToyFamily(ClassifyFamily):
    """Uninformative observation; action 1 always passes, π₀ prefers action 0."""

    def __init__(self) -> None:
        super().__init__(ClassifyConfig(classes=TOY_ACTIONS, feature_dim=TOY_OBS_DIM))

    def generate(self, rng: Rng, instance_id=None) -> TaskInstance:
        return TaskInstance(
            kind="classify",
            observation=np.ones(TOY_OBS_DIM),
            truth=ClassifyTruth(label=1),
            action_count=TOY_ACTIONS,
            instance_id=instance_id,
        )


def fixed_preference_weights(logits: np.ndarray, observation_dim: int, hidden: int = 8) -> PolicyWeights:
    """π₀ whose affordance is softmax(logits) for every observation."""

    weights = init_base_weights(observation_dim, len(logits), Rng(1), hidden=hidden)
    params = weights.params.replace(
        {
            "base_decoder.w": np.zeros_like(weights.params["base_decoder.w"]),
            "base_decoder.b": np.asarray(logits, dtype=np.float64),
        }
    )
    return weights.with_params(params)


@pytest.fixture
def toy_family() -> ToyFamily:
    return ToyFamily()


@pytest.fixture
def toy_base() -> PolicyWeights:
    return fixed_preference_weights(TOY_LOGITS, TOY_OBS_DIM)


@pytest.fixture
def small_classify() -> ClassifyFamily:
    return ClassifyFamily(ClassifyConfig(classes=5, feature_dim=6, separation=6.0, noise=0.5))


@pytest.fixture
def small_base(small_classify) -> PolicyWeights:
    return init_base_weights(small_classify.observation_dim, small_classify.action_count, Rng(3), hidden=8)


@pytest.fixture
def run_dir(tmp_path):
    out = tmp_path / "runs"
    out.mkdir()
    return out


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


@pytest.fixture
def preference_weights():
    """Factory for fixed-preference π₀ weights."""

    return fixed_preference_weights
