"""Self-assessable task families: classification, correlated feasibility, grid localization."""

from .config import TASK_KINDS, ClassifyConfig, CorrelatedConfig, LocalizeConfig, TaskConfig, task_config_for
from .families import ClassifyFamily, CorrelatedFamily, LocalizeFamily, TaskFamily, family_for
from .generators import gen_classification, gen_correlated, gen_localization
from .grid import build_map, empty_map, raycast
from .oracle import SelfAssessment, assess, passing_mask
from .types import ClassifyTruth, CorrelatedTruth, CostTable, GridMap, LocalizeTruth, TaskInstance

__all__ = [
    "TASK_KINDS",
    "ClassifyConfig",
    "ClassifyFamily",
    "ClassifyTruth",
    "CorrelatedConfig",
    "CorrelatedFamily",
    "CorrelatedTruth",
    "CostTable",
    "GridMap",
    "LocalizeConfig",
    "LocalizeFamily",
    "LocalizeTruth",
    "SelfAssessment",
    "TaskConfig",
    "TaskFamily",
    "TaskInstance",
    "assess",
    "build_map",
    "empty_map",
    "family_for",
    "gen_classification",
    "gen_correlated",
    "gen_localization",
    "passing_mask",
    "raycast",
    "task_config_for",
]
