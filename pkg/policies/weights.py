"""PolicyWeights: architecture choices plus one named parameter set."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from app_core.errors import ArgumentError, ConsistencyError
from numkit.layers import GRU_BLOCKS
from numkit.params import ParamSet
from numkit.rng import Rng

from .networks import (
    SHARED_PREFIXES,
    ArchitectureSpec,
    init_base_params,
    init_fmp1_params,
    init_fmp2_params,
)


@dataclass(frozen=True)
class PolicyWeights:
    spec: ArchitectureSpec
    params: ParamSet

    def __post_init__(self) -> None:
        has_cell = any(name.startswith("recurrent.") for name in self.params)
        if has_cell != (self.spec.architecture == "fmp2"):
            raise ConsistencyError(
                f"recurrent cell present={has_cell} does not match architecture {self.spec.architecture!r}"
            )
        if has_cell:
            missing = [block for block in GRU_BLOCKS if f"recurrent.{block}" not in self.params]
            if missing:
                raise ConsistencyError(f"recurrent cell is missing blocks {missing}")
        for name in ("obs_encoder.w1", "base_decoder.w"):
            if name not in self.params:
                raise ConsistencyError(f"policy weights lack the π₀ parameter {name!r}")

    @property
    def architecture(self) -> str:
        return self.spec.architecture

    @property
    def action_count(self) -> int:
        return self.spec.action_count

    @property
    def shared_partition(self) -> tuple[str, ...]:
        return tuple(name for name in self.params if name.startswith(SHARED_PREFIXES))

    @property
    def obs_encoder(self) -> ParamSet:
        return self.params.subset("obs_encoder.")

    @property
    def mem_encoder(self) -> ParamSet:
        return self.params.subset("mem_encoder.")

    @property
    def decoder(self) -> ParamSet:
        return self.params.subset("decoder.")

    @property
    def recurrent_cell(self) -> Optional[ParamSet]:
        cell = self.params.subset("recurrent.")
        return cell if len(cell) else None

    def base_params(self) -> ParamSet:
        """The π₀ part alone, as trained by behavior cloning."""

        return self.params.subset("obs_encoder.").merge(self.params.subset("base_decoder."))

    def with_params(self, params: ParamSet) -> "PolicyWeights":
        return PolicyWeights(self.spec, params)

    def freeze_shared(self) -> "PolicyWeights":
        return PolicyWeights(self.spec, self.params.freeze(self.shared_partition))


def init_base_weights(observation_dim: int, action_count: int, rng: Rng, *, hidden: int = 64) -> PolicyWeights:
    if observation_dim < 1 or action_count < 1:
        raise ArgumentError("observation_dim and action_count must be positive")
    spec = ArchitectureSpec(
        architecture="base", observation_dim=observation_dim, action_count=action_count, hidden=hidden
    )
    return PolicyWeights(spec, init_base_params(spec, rng))


def init_failure_aware_weights(base: PolicyWeights, spec: ArchitectureSpec, rng: Rng) -> PolicyWeights:
    """Failure-aware weights on top of a trained π₀; the shared partition comes out frozen."""

    if spec.architecture == "base":
        raise ArgumentError("failure-aware weights need architecture fmp1 or fmp2")
    if (spec.observation_dim, spec.action_count, spec.hidden) != (
        base.spec.observation_dim,
        base.spec.action_count,
        base.spec.hidden,
    ):
        raise ArgumentError("failure-aware spec disagrees with the π₀ shapes")
    shared = base.base_params()
    if spec.architecture == "fmp1":
        extra = init_fmp1_params(spec, rng)
    else:
        extra = init_fmp2_params(spec, shared, rng)
    params = shared.merge(ParamSet(extra))
    return PolicyWeights(spec, params).freeze_shared()


__all__ = ["PolicyWeights", "init_base_weights", "init_failure_aware_weights"]
