"""π₀ and the re-decision policies: RE, LPRE, SP, FMP-1 (FMP-1.5), FMP-2."""

from .networks import ArchitectureSpec
from .policy import (
    DecisionScores,
    FMP1Policy,
    FMP2Policy,
    LearnedPolicyRandomElimination,
    Policy,
    RandomElimination,
    SortingPolicy,
)
from .registry import POLICY_NAMES, build_policy, failure_aware_spec, get_entry
from .selectors import (
    PolicyState,
    base_forward,
    masked_argmax,
    select_fmp1,
    select_fmp2,
    select_lpre,
    select_random,
    select_sorting,
)
from .weights import PolicyWeights, init_base_weights, init_failure_aware_weights

__all__ = [
    "ArchitectureSpec",
    "DecisionScores",
    "FMP1Policy",
    "FMP2Policy",
    "LearnedPolicyRandomElimination",
    "POLICY_NAMES",
    "Policy",
    "PolicyState",
    "PolicyWeights",
    "RandomElimination",
    "SortingPolicy",
    "base_forward",
    "build_policy",
    "failure_aware_spec",
    "get_entry",
    "init_base_weights",
    "init_failure_aware_weights",
    "masked_argmax",
    "select_fmp1",
    "select_fmp2",
    "select_lpre",
    "select_random",
    "select_sorting",
]
