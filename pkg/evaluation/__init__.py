"""Metrics, seed aggregation, evaluation sweeps and per-episode case studies."""

from .case_study import CaseStudy, TrialRecord, case_studies, remaining_distribution, trace_case
from .metrics import CSV_COLUMNS, MetricsReport, aggregate_reports, compute_metrics, wilson_interval
from .suite import SuiteCell, evaluate_policy, evaluation_instances, max_trials_curve, run_suite

__all__ = [
    "CSV_COLUMNS",
    "CaseStudy",
    "MetricsReport",
    "SuiteCell",
    "TrialRecord",
    "aggregate_reports",
    "case_studies",
    "compute_metrics",
    "evaluate_policy",
    "evaluation_instances",
    "max_trials_curve",
    "remaining_distribution",
    "run_suite",
    "trace_case",
    "wilson_interval",
]
