"""Command line: gen-data, train-bc, train-fa, eval, sweep, trace, plot."""

from __future__ import annotations

import functools
import logging
from pathlib import Path
from typing import Any, Optional

import click
from pydantic import ValidationError

from app_core.config import bootstrap, default_threads
from app_core.errors import (
    ArgumentError,
    CheckpointError,
    CompatibilityError,
    ConfigError,
    DependencyError,
    FailureAwareError,
    StorageError,
)
from app_core.run_config import RunConfig, config_echo, config_hash, load_run_config
from episode.types import EpisodeConfig
from evaluation.case_study import case_studies
from evaluation.metrics import aggregate_reports
from evaluation.suite import SuiteCell, run_suite
from logs.run_logger import RunLogger
from numkit.rng import Rng
from policies.registry import build_policy, failure_aware_spec, get_entry
from policies.weights import PolicyWeights, init_base_weights, init_failure_aware_weights
from storage.json_storage import JSONStorage
from tasks.families import TaskFamily, family_for
from training.bc import BCDataset, train_bc
from training.config import TrainConfig
from training.dqn import dqn_train

from .plots import plot_case_studies, plot_reports, sweep_label

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEPENDENCY = 3
EXIT_IO = 4


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (ConfigError, ArgumentError)):
        return EXIT_CONFIG
    if isinstance(exc, DependencyError):
        return EXIT_DEPENDENCY
    if isinstance(exc, (CheckpointError, OSError)):
        return EXIT_IO
    return 1


def handle_errors(command):
    """Log expected failures without a traceback and exit with their code."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except (FailureAwareError, OSError) as exc:
            logger.error("%s: %s", type(exc).__name__, exc)
            raise click.exceptions.Exit(exit_code_for(exc)) from exc

    return wrapper


def run_options(command):
    command = click.option("--threads", type=click.IntRange(min=1), default=None, help="Evaluation worker threads.")(command)
    command = click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")(command)
    command = click.option("--seed", type=click.IntRange(min=0, max=2**64 - 1), default=None, help="Master seed.")(command)
    command = click.option(
        "--config", "config_path", type=click.Path(dir_okay=False), required=True, help="TOML run file."
    )(command)
    return command


def _load(config_path: str, seed: Optional[int], out: Optional[str], threads: Optional[int]) -> RunConfig:
    if not Path(config_path).is_file():
        raise ConfigError(f"run file not found: {config_path}")
    cfg = load_run_config(config_path)
    if threads is None and "threads" not in cfg.run.model_fields_set:
        threads = default_threads()
    cfg = cfg.with_overrides(seed=seed, out=out, threads=threads)
    logger.info("Run %s (seed %d, out %s)", cfg.run_name, cfg.run.seed, cfg.run.out)
    return cfg


def _storage(cfg: RunConfig) -> JSONStorage:
    storage = JSONStorage(cfg.run.out)
    storage.ensure_dirs()
    return storage


def train_config(cfg: RunConfig, stage: str) -> TrainConfig:
    """Per-task defaults overridden by the ``[train]`` section; the master seed always wins."""

    if "seed" in cfg.train:
        raise ConfigError("unknown key 'train.seed' (the seed is set by run.seed or --seed)")
    overrides = {**cfg.train, "seed": cfg.run.seed}
    try:
        train_cfg = TrainConfig.for_task(cfg.task.kind, stage, **overrides)
    except ValidationError as exc:
        problems = []
        for error in exc.errors():
            key = ".".join(["train", *(str(part) for part in error.get("loc", ()))])
            if error.get("type") == "extra_forbidden":
                problems.append(f"unknown key '{key}'")
            else:
                problems.append(f"'{key}': {error.get('msg')}")
        raise ConfigError("invalid run configuration: " + "; ".join(problems)) from exc
    train_cfg.validate_ranges()
    return train_cfg


def check_compatible(weights: PolicyWeights, family: TaskFamily, label: str) -> None:
    if weights.action_count != family.action_count:
        raise CompatibilityError(
            f"{label} covers {weights.action_count} actions, task {family.kind} has {family.action_count}"
        )
    if weights.spec.observation_dim != family.observation_dim:
        raise CompatibilityError(
            f"{label} expects observations of width {weights.spec.observation_dim}, "
            f"task {family.kind} produces {family.observation_dim}"
        )


def _checkpoint(storage: JSONStorage, path: str, label: str) -> PolicyWeights:
    if not Path(path).is_file():
        raise DependencyError(f"{label} checkpoint not found: {path}")
    return storage.load_checkpoint(path).weights


def _dataset_records(storage: JSONStorage, cfg: RunConfig, family: TaskFamily) -> list[dict[str, Any]]:
    if not cfg.data.path:
        raise DependencyError("no dataset configured (data.path)")
    if not Path(cfg.data.path).is_file():
        raise DependencyError(f"dataset not found: {cfg.data.path}")
    dataset = storage.load_dataset(cfg.data.path)
    if dataset.kind != family.kind or dataset.config != config_echo(cfg.task):
        raise CompatibilityError(f"dataset {cfg.data.path} was generated for another task configuration")
    return dataset.records


def _episode_config(cfg: RunConfig) -> EpisodeConfig:
    return EpisodeConfig(
        max_trials=cfg.eval.max_trials, memory_mode=cfg.eval.memory_mode, memory_radius=cfg.eval.memory_radius
    )


def _resolve(template: Optional[str], value: Any) -> Optional[str]:
    if template is None or value is None:
        return template
    return template.replace("{value}", str(value))


def build_policies(
    cfg: RunConfig, family: TaskFamily, storage: JSONStorage, sweep_value: Any = None
) -> dict[str, Any]:
    """Policies named in ``policy.names``; checkpoint paths may carry a ``{value}`` placeholder."""

    names = list(dict.fromkeys(cfg.policy.names))
    if not names:
        raise ConfigError("policy.names lists no policy to evaluate")
    entries = {name: get_entry(name) for name in names}
    unknown = sorted(set(cfg.policy.checkpoints) - set(names))
    if unknown:
        raise ConfigError(f"policy.checkpoints names policies not under evaluation: {unknown}")

    base = None
    base_path = _resolve(cfg.policy.base_checkpoint, sweep_value)
    if base_path and any(entry.needs_base for entry in entries.values()):
        base = _checkpoint(storage, base_path, "π₀")
        check_compatible(base, family, f"π₀ checkpoint {base_path}")

    policies = {}
    for name in names:
        weights = None
        path = _resolve(cfg.policy.checkpoints.get(name), sweep_value)
        if path:
            weights = _checkpoint(storage, path, name)
            check_compatible(weights, family, f"{name} checkpoint {path}")
        policies[name] = build_policy(name, family.action_count, base=base, weights=weights)
    return policies


def _log_pooled(reports) -> None:
    by_policy: dict[tuple[str, str], list] = {}
    for report in reports:
        by_policy.setdefault((report.policy, report.task), []).append(report)
    for (policy, task), group in by_policy.items():
        pooled = aggregate_reports(group)
        logger.info(
            "%s / %s: tsr %.4f [%.4f, %.4f] tns %s over %d episodes",
            policy,
            task,
            pooled.tsr,
            pooled.tsr_ci[0],
            pooled.tsr_ci[1],
            "n/a" if pooled.tns is None else f"{pooled.tns:.3f}",
            pooled.episodes,
        )


@click.group()
def cli() -> None:
    """Failure-aware re-decision experiments."""

    bootstrap()


@cli.command("gen-data")
@run_options
@handle_errors
def gen_data(config_path: str, seed: Optional[int], out: Optional[str], threads: Optional[int]) -> None:
    """Generate a task dataset with supervision targets."""

    cfg = _load(config_path, seed, out, threads)
    storage = _storage(cfg)
    family = family_for(cfg.task)
    instances = family.instances(cfg.data.count, cfg.run.seed)
    path = storage.save_dataset(cfg.run_name, family, instances, config_echo(cfg.task), cfg.run.seed)
    click.echo(str(path))


@cli.command("train-bc")
@run_options
@handle_errors
def train_bc_command(config_path: str, seed: Optional[int], out: Optional[str], threads: Optional[int]) -> None:
    """Behavior-clone π₀ on a dataset file (or freshly generated instances)."""

    cfg = _load(config_path, seed, out, threads)
    storage = _storage(cfg)
    family = family_for(cfg.task)
    if cfg.data.path:
        dataset = BCDataset.from_records(_dataset_records(storage, cfg, family))
    else:
        dataset = BCDataset.from_family(family, cfg.data.count, cfg.run.seed)
    train_cfg = train_config(cfg, "bc")
    echo = config_echo(cfg)
    name = f"{cfg.run_name}-bc"
    run_logger = RunLogger(name, storage.logs_dir, config_hash=config_hash(echo))

    weights = init_base_weights(
        family.observation_dim, family.action_count, Rng(cfg.run.seed).fork("bc-init"), hidden=cfg.policy.hidden
    )
    result = train_bc(weights, dataset, train_cfg, run_logger=run_logger)
    metrics = {
        "losses": result.losses,
        "train_accuracy": result.train_accuracy,
        "val_accuracy": result.val_accuracy,
    }
    path = storage.save_checkpoint(name, result.weights, echo, metrics)
    run_logger.log_event("checkpoint", {"path": str(path)})
    run_logger.save()
    logger.info("Run log summary: %s", run_logger.get_summary())
    click.echo(str(path))


@cli.command("train-fa")
@run_options
@handle_errors
def train_fa_command(config_path: str, seed: Optional[int], out: Optional[str], threads: Optional[int]) -> None:
    """Train a failure-aware policy by DQN on top of a frozen π₀ checkpoint."""

    cfg = _load(config_path, seed, out, threads)
    if not cfg.policy.base_checkpoint:
        raise DependencyError("train-fa needs policy.base_checkpoint (the output of train-bc)")
    storage = _storage(cfg)
    family = family_for(cfg.task)
    base = _checkpoint(storage, cfg.policy.base_checkpoint, "π₀")
    if base.architecture != "base":
        raise CompatibilityError(f"{cfg.policy.base_checkpoint} holds {base.architecture!r} weights, not π₀")
    check_compatible(base, family, f"π₀ checkpoint {cfg.policy.base_checkpoint}")

    name = cfg.policy.name
    if not get_entry(name).trainable:
        raise ArgumentError(f"policy {name!r} is not trained by train-fa")
    train_cfg = train_config(cfg, "fa")
    spec = failure_aware_spec(name, base, **cfg.policy.spec_overrides())
    weights = init_failure_aware_weights(base, spec, Rng(cfg.run.seed).fork("fa-init"))

    echo = config_echo(cfg)
    run_name = f"{cfg.run_name}-{name}"
    run_logger = RunLogger(run_name, storage.logs_dir, config_hash=config_hash(echo))
    result = dqn_train(weights, family, train_cfg, Rng(cfg.run.seed).fork("dqn"), run_logger=run_logger)
    metrics = {
        "reward_curve": result.reward_curve,
        "loss_curve": result.loss_curve,
        "success_rate": result.success_rate,
        "updates": result.updates,
    }
    path = storage.save_checkpoint(run_name, result.weights, echo, metrics)
    run_logger.log_event("checkpoint", {"path": str(path)})
    run_logger.save()
    logger.info("Run log summary: %s", run_logger.get_summary())
    click.echo(str(path))


@cli.command("eval")
@run_options
@handle_errors
def eval_command(config_path: str, seed: Optional[int], out: Optional[str], threads: Optional[int]) -> None:
    """Evaluate the configured policies; writes CSV and JSON reports."""

    cfg = _load(config_path, seed, out, threads)
    storage = _storage(cfg)
    family = family_for(cfg.task)
    policies = build_policies(cfg, family, storage)
    instances = None
    if cfg.eval.use_dataset:
        instances = tuple(family.from_record(record) for record in _dataset_records(storage, cfg, family))
    cell = SuiteCell(family.kind, family, config_hash(config_echo(cfg.task)), instances)
    seeds = [cfg.run.seed] if seed is not None else cfg.eval.seeds
    reports = run_suite(policies, [cell], cfg.eval.episodes, seeds, _episode_config(cfg), threads=cfg.run.threads)
    _log_pooled(reports)
    csv_path, json_path = storage.save_reports(f"{cfg.run_name}-eval", reports, config_echo(cfg))
    click.echo(str(csv_path))
    click.echo(str(json_path))


@cli.command("sweep")
@run_options
@click.option("--plot/--no-plot", "emit_plots", default=False, help="Also write tsr/tns figures.")
@handle_errors
def sweep_command(
    config_path: str, seed: Optional[int], out: Optional[str], threads: Optional[int], emit_plots: bool
) -> None:
    """Evaluate every policy at each value of ``sweep.axis``."""

    cfg = _load(config_path, seed, out, threads)
    if not cfg.sweep.axis or not cfg.sweep.values:
        raise ConfigError("sweep needs sweep.axis and a non-empty sweep.values")
    storage = _storage(cfg)
    seeds = [cfg.run.seed] if seed is not None else cfg.eval.seeds
    reports = []
    for value in cfg.sweep.values:
        value_cfg = cfg.with_task_value(cfg.sweep.axis, value)
        family = family_for(value_cfg.task)
        policies = build_policies(value_cfg, family, storage, sweep_value=value)
        cell = SuiteCell(sweep_label(cfg.sweep.axis, value), family, config_hash(config_echo(value_cfg.task)))
        logger.info("Sweep %s = %s", cfg.sweep.axis, value)
        reports.extend(
            run_suite(policies, [cell], cfg.eval.episodes, seeds, _episode_config(cfg), threads=cfg.run.threads)
        )
    _log_pooled(reports)
    csv_path, json_path = storage.save_reports(f"{cfg.run_name}-sweep", reports, config_echo(cfg))
    click.echo(str(csv_path))
    click.echo(str(json_path))
    if emit_plots:
        frame = storage.load_report_csv(csv_path)
        for path in plot_reports(
            frame, storage.plots_dir, metrics=cfg.plot.metrics, axis=cfg.sweep.axis, fmt=cfg.plot.format, stem=csv_path.stem
        ):
            click.echo(str(path))


@cli.command("trace")
@run_options
@click.option("--plot/--no-plot", "emit_plots", default=True, help="Also draw one figure per replayed episode.")
@handle_errors
def trace_command(
    config_path: str, seed: Optional[int], out: Optional[str], threads: Optional[int], emit_plots: bool
) -> None:
    """Replay chosen evaluation episodes trial by trial for every configured policy."""

    cfg = _load(config_path, seed, out, threads)
    storage = _storage(cfg)
    family = family_for(cfg.task)
    policies = build_policies(cfg, family, storage)
    eval_seed = cfg.run.seed if seed is not None or not cfg.eval.seeds else cfg.eval.seeds[0]
    echo = config_echo(cfg)
    name = f"{cfg.run_name}-cases"
    run_logger = RunLogger(name, storage.logs_dir, config_hash=config_hash(echo))
    studies = case_studies(
        policies, family, cfg.cases.episodes, _episode_config(cfg), eval_seed, run_logger=run_logger
    )
    log_path = run_logger.save()
    for study in studies:
        click.echo(study.describe())
    click.echo(str(log_path))
    if emit_plots:
        records = [study.to_record() for study in studies]
        for path in plot_case_studies(records, storage.plots_dir, fmt=cfg.plot.format, stem=name):
            click.echo(str(path))


@cli.command("plot")
@run_options
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None, help="Report CSV to plot.")
@click.option("--cases", "cases_path", type=click.Path(dir_okay=False), default=None, help="Trace log to plot.")
@handle_errors
def plot_command(
    config_path: str,
    seed: Optional[int],
    out: Optional[str],
    threads: Optional[int],
    csv_path: Optional[str],
    cases_path: Optional[str],
) -> None:
    """Redraw figures from report CSVs (every one under reports/ by default) or from a trace log."""

    cfg = _load(config_path, seed, out, threads)
    storage = _storage(cfg)
    if cases_path:
        if not Path(cases_path).is_file():
            raise DependencyError(f"trace log not found: {cases_path}")
        records = storage.load_case_studies(cases_path)
        for path in plot_case_studies(records, storage.plots_dir, fmt=cfg.plot.format, stem=Path(cases_path).stem):
            click.echo(str(path))
        return

    source = csv_path or cfg.plot.csv
    if source:
        if not Path(source).is_file():
            raise DependencyError(f"report not found: {source}")
        frames = [(Path(source), storage.load_report_csv(source))]
    else:
        frames = []
        for path in storage.list_report_csvs():
            try:
                frames.append((path, storage.load_report_csv(path)))
            except StorageError as exc:
                logger.error("Skipping report %s: %s", path, exc)
        if not frames:
            raise DependencyError(f"no readable report CSV under {storage.reports_dir}; run eval or sweep first")

    for path, frame in frames:
        written = plot_reports(
            frame,
            storage.plots_dir,
            metrics=cfg.plot.metrics,
            axis=cfg.plot.axis or cfg.sweep.axis,
            fmt=cfg.plot.format,
            stem=path.stem,
        )
        for figure in written:
            click.echo(str(figure))


def main() -> None:
    cli(prog_name="failure-aware")


__all__ = ["EXIT_CONFIG", "EXIT_DEPENDENCY", "EXIT_IO", "EXIT_OK", "cli", "exit_code_for", "main", "train_config"]
