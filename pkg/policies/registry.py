"""Name -> policy construction for the harness and the evaluation suite."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from app_core.errors import ArgumentError, CompatibilityError, DependencyError
from numkit.rng import Rng

from .networks import ArchitectureSpec
from .policy import FMP1Policy, FMP2Policy, LearnedPolicyRandomElimination, Policy, RandomElimination, SortingPolicy
from .weights import PolicyWeights, init_failure_aware_weights


@dataclass(frozen=True)
class PolicyEntry:
    """How one named policy is built."""

    name: str
    needs_base: bool = False
    # failure-aware architecture trained by DQN, None for baselines
    architecture: Optional[str] = None
    spec_defaults: Dict[str, Any] = field(default_factory=dict)

    @property
    def trainable(self) -> bool:
        return bool(self.architecture) and self.name != "FMP-1-identity"


POLICIES: dict[str, PolicyEntry] = {
    "RE": PolicyEntry("RE"),
    "LPRE": PolicyEntry("LPRE", needs_base=True),
    "SP": PolicyEntry("SP", needs_base=True),
    "FMP-1-identity": PolicyEntry(
        "FMP-1-identity",
        needs_base=True,
        architecture="fmp1",
        spec_defaults={"embedding": "affordance", "mem_encoder": "identity", "decoder": "identity", "replica": 1},
    ),
    "FMP-1": PolicyEntry(
        "FMP-1",
        needs_base=True,
        architecture="fmp1",
        spec_defaults={"embedding": "affordance", "mem_encoder": "replica", "decoder": "mlp", "replica": 1},
    ),
    "FMP-1.5": PolicyEntry(
        "FMP-1.5",
        needs_base=True,
        architecture="fmp1",
        spec_defaults={"embedding": "affordance", "mem_encoder": "learned", "decoder": "mlp", "replica": 1},
    ),
    "FMP-2": PolicyEntry("FMP-2", needs_base=True, architecture="fmp2"),
}
POLICY_NAMES: tuple[str, ...] = tuple(POLICIES)


def get_entry(name: str) -> PolicyEntry:
    try:
        return POLICIES[name]
    except KeyError:
        raise ArgumentError(f"unknown policy {name!r}; expected one of {POLICY_NAMES}") from None


def failure_aware_spec(name: str, base: PolicyWeights, **overrides) -> ArchitectureSpec:
    """Architecture of the named failure-aware policy on top of ``base``."""

    entry = get_entry(name)
    if entry.architecture is None:
        raise ArgumentError(f"policy {name!r} has no failure-aware network")
    values = {
        "architecture": entry.architecture,
        "observation_dim": base.spec.observation_dim,
        "action_count": base.spec.action_count,
        "hidden": base.spec.hidden,
    }
    values.update(entry.spec_defaults)
    values.update(overrides)
    return ArchitectureSpec(**values)


def build_policy(
    name: str,
    action_count: int,
    *,
    base: Optional[PolicyWeights] = None,
    weights: Optional[PolicyWeights] = None,
) -> Policy:
    """Build the named policy; learned policies need ``weights`` except FMP-1-identity."""

    entry = get_entry(name)
    for label, candidate in (("π₀", base), ("policy", weights)):
        if candidate is not None and candidate.action_count != action_count:
            raise CompatibilityError(
                f"{label} checkpoint for {name} covers {candidate.action_count} actions, task has {action_count}"
            )
    if entry.needs_base and base is None and weights is None:
        raise DependencyError(f"policy {name!r} needs a π₀ checkpoint")

    if name == "RE":
        return RandomElimination(action_count)
    if name == "LPRE":
        return LearnedPolicyRandomElimination(action_count, base or weights)
    if name == "SP":
        return SortingPolicy(action_count, base or weights)
    if name == "FMP-1-identity":
        source = base or weights
        identity = init_failure_aware_weights(source, failure_aware_spec(name, source), Rng(0))
        return FMP1Policy(identity, name=name)

    if weights is None:
        raise DependencyError(f"policy {name!r} needs a trained failure-aware checkpoint")
    if weights.architecture != entry.architecture:
        raise CompatibilityError(f"checkpoint holds {weights.architecture!r} weights, {name} needs {entry.architecture!r}")
    if entry.architecture == "fmp1":
        return FMP1Policy(weights, name=name)
    return FMP2Policy(weights, name=name)


__all__ = ["POLICIES", "POLICY_NAMES", "PolicyEntry", "build_policy", "failure_aware_spec", "get_entry"]
