"""Trained-policy orderings on the correlated and localization tasks, plus the shipped run files."""

from pathlib import Path

import pytest

from app_core.run_config import load_run_config
from episode import EpisodeConfig
from evaluation.suite import SuiteCell, run_suite
from numkit.rng import Rng
from policies.registry import build_policy, failure_aware_spec
from policies.weights import init_base_weights, init_failure_aware_weights
from tasks.config import CorrelatedConfig, LocalizeConfig
from tasks.families import CorrelatedFamily, LocalizeFamily
from training.bc import BCDataset, train_bc
from training.config import TrainConfig
from training.dqn import dqn_train

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"
# evaluation noise over 2 seeds × 1000 episodes plus a short training budget
SLACK = 0.03


def _train(family, kind, names, seed=0):
    base = init_base_weights(family.observation_dim, family.action_count, Rng(seed), hidden=32)
    dataset = BCDataset.from_family(family, 2000, seed=seed)
    base = train_bc(base, dataset, TrainConfig.for_task(kind, "bc", epochs=20, seed=seed)).weights
    policies = {
        "LPRE": build_policy("LPRE", family.action_count, base=base),
        "SP": build_policy("SP", family.action_count, base=base),
    }
    fa_cfg = TrainConfig.for_task(kind, "fa", lr=1e-3, episodes=3000, target_update=200, batch_size=32, seed=seed)
    for name in names:
        weights = init_failure_aware_weights(base, failure_aware_spec(name, base), Rng(seed).fork(name))
        trained = dqn_train(weights, family, fa_cfg, Rng(seed).fork(f"dqn-{name}")).weights
        policies[name] = build_policy(name, family.action_count, base=base, weights=trained)
    return policies


def _tsr(policies, family):
    reports = run_suite(policies, [SuiteCell("cell", family)], 1000, [0, 1], EpisodeConfig(max_trials=5))
    by_policy = {}
    for report in reports:
        by_policy.setdefault(report.policy, []).append(report.tsr)
    return {name: sum(rates) / len(rates) for name, rates in by_policy.items()}


@pytest.fixture(scope="module")
def correlated_rates():
    rates = {}
    for length in (0.0, 5.0):
        family = CorrelatedFamily(CorrelatedConfig(correlation_length=length))
        rates[length] = _tsr(_train(family, "correlated", ["FMP-1", "FMP-2"]), family)
    return rates


@pytest.mark.slow
def test_recurrent_policy_gains_where_failures_are_correlated(correlated_rates):
    rates = correlated_rates[5.0]
    assert rates["FMP-2"] >= rates["SP"] - SLACK
    assert rates["FMP-2"] >= rates["FMP-1"] - SLACK
    assert rates["FMP-1"] >= rates["SP"] - SLACK
    assert rates["SP"] >= rates["LPRE"] - SLACK


@pytest.mark.slow
def test_recurrent_policy_matches_sorting_without_correlation(correlated_rates):
    rates = correlated_rates[0.0]
    assert abs(rates["FMP-2"] - rates["SP"]) <= 2 * SLACK


@pytest.mark.slow
@pytest.mark.parametrize("k", [5, 9, 15])
def test_fmp1_keeps_up_with_sorting_across_box_sizes(k):
    family = LocalizeFamily(LocalizeConfig(height=24, width=24, beams=12, k=k, num_maps=2))
    rates = _tsr(_train(family, "localize", ["FMP-1"]), family)
    assert rates["FMP-1"] >= rates["SP"] - SLACK


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.toml")), ids=lambda path: path.stem)
def test_shipped_run_files_parse(path):
    cfg = load_run_config(path)
    assert cfg.run.name
    if cfg.sweep.axis:
        assert cfg.sweep.values
        cfg.with_task_value(cfg.sweep.axis, cfg.sweep.values[-1])


def test_run_files_cover_the_experiments():
    assert {"classify", "correlated", "correlation_sweep", "k_ablation"} <= {path.stem for path in CONFIG_DIR.glob("*.toml")}
