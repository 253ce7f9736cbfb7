"""Run files: TOML sections validated by pydantic, echoed into every artifact."""

from __future__ import annotations

import hashlib
import json
import logging
import tomllib
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, ValidationError

from tasks.config import TASK_KINDS, ClassifyConfig, TaskConfig

from .errors import ConfigError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RunSection(_Section):
    name: Optional[str] = None
    seed: int = Field(default=0, ge=0)
    out: str = "runs"
    threads: int = Field(default=1, ge=1)
    format_version: int = FORMAT_VERSION


class DataSection(_Section):
    count: int = Field(default=1000, ge=1)
    # dataset file: train-bc input, optional fixed evaluation set
    path: Optional[str] = None


class PolicySection(_Section):
    # policy trained by train-fa
    name: str = "FMP-2"
    # policies compared by eval/sweep
    names: List[str] = Field(default_factory=lambda: ["RE", "LPRE", "SP"])
    base_checkpoint: Optional[str] = None
    checkpoints: Dict[str, str] = Field(default_factory=dict)
    hidden: int = Field(default=64, ge=1)
    embedding: Optional[Literal["affordance", "projected"]] = None
    mem_encoder: Optional[Literal["identity", "replica", "learned"]] = None
    decoder: Optional[Literal["identity", "mlp"]] = None
    replica: Optional[int] = Field(default=None, ge=1)
    emit_first: Optional[bool] = None

    def spec_overrides(self) -> dict[str, Any]:
        keys = ("embedding", "mem_encoder", "decoder", "replica", "emit_first")
        return {key: getattr(self, key) for key in keys if getattr(self, key) is not None}


class EvalSection(_Section):
    episodes: int = Field(default=1000, ge=1)
    seeds: List[int] = Field(default_factory=lambda: [0])
    max_trials: int = Field(default=5, ge=1)
    memory_mode: Literal["binary", "normalized"] = "binary"
    memory_radius: int = Field(default=0, ge=0)
    use_dataset: bool = False


class SweepSection(_Section):
    # dotted task key swept, e.g. "task.correlation_length" or "task.k"
    axis: Optional[str] = None
    values: List[Any] = Field(default_factory=list)


class PlotSection(_Section):
    csv: Optional[str] = None
    axis: Optional[str] = None
    metrics: List[Literal["tsr", "tns", "pc_recip"]] = Field(default_factory=lambda: ["tsr", "tns"])
    format: Literal["svg", "html"] = "svg"


class CaseSection(_Section):
    # evaluation episode indices replayed trial by trial by `trace`
    episodes: List[NonNegativeInt] = Field(default_factory=lambda: [0, 1, 2])


class RunConfig(_Section):
    run: RunSection = Field(default_factory=RunSection)
    task: TaskConfig = Field(default_factory=ClassifyConfig)
    data: DataSection = Field(default_factory=DataSection)
    policy: PolicySection = Field(default_factory=PolicySection)
    train: Dict[str, Any] = Field(default_factory=dict)
    eval: EvalSection = Field(default_factory=EvalSection)
    sweep: SweepSection = Field(default_factory=SweepSection)
    plot: PlotSection = Field(default_factory=PlotSection)
    cases: CaseSection = Field(default_factory=CaseSection)

    def with_overrides(
        self,
        *,
        seed: Optional[int] = None,
        out: Optional[str] = None,
        threads: Optional[int] = None,
    ) -> "RunConfig":
        updates = {key: value for key, value in (("seed", seed), ("out", out), ("threads", threads)) if value is not None}
        if not updates:
            return self
        return self.model_copy(update={"run": self.run.model_copy(update=updates)})

    def with_task_value(self, dotted: str, value: Any) -> "RunConfig":
        """Copy with one ``task.<field>`` replaced, re-validated."""

        section, _, key = dotted.partition(".")
        if section != "task" or not key:
            raise ConfigError(f"sweep axis must be a task key like 'task.k', got {dotted!r}")
        payload = config_echo(self)
        if key not in payload["task"]:
            raise ConfigError(f"unknown sweep axis key {dotted!r}")
        payload["task"][key] = value
        return parse_run_config(payload)

    @property
    def run_name(self) -> str:
        return self.run.name or f"{self.task.kind}-{config_hash(config_echo(self))}"


def _dotted(loc: tuple) -> str:
    parts = [str(part) for part in loc]
    # drop the discriminator tag pydantic inserts for tagged unions
    if len(parts) > 1 and parts[0] == "task" and parts[1] in TASK_KINDS:
        parts.pop(1)
    return ".".join(parts)


def _config_error(exc: ValidationError) -> ConfigError:
    problems = []
    for error in exc.errors():
        key = _dotted(error.get("loc", ()))
        if error.get("type") == "extra_forbidden":
            problems.append(f"unknown key '{key}'")
        else:
            problems.append(f"'{key}': {error.get('msg')}")
    return ConfigError("invalid run configuration: " + "; ".join(problems))


def parse_run_config(payload: Dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(payload)
    except ValidationError as exc:
        raise _config_error(exc) from exc


def load_run_config(path: Path | str) -> RunConfig:
    path = Path(path)
    try:
        with path.open("rb") as handle:
            payload = tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: malformed TOML: {exc}") from exc
    logger.debug("loaded run file %s", path)
    return parse_run_config(payload)


def config_echo(config: BaseModel) -> Dict[str, Any]:
    """JSON-safe dict that reproduces ``config`` when parsed again."""

    return json.loads(json.dumps(config.model_dump(mode="json"), sort_keys=True))


def config_hash(echo: Dict[str, Any]) -> str:
    canonical = json.dumps(echo, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


__all__ = [
    "FORMAT_VERSION",
    "RunConfig",
    "config_echo",
    "config_hash",
    "load_run_config",
    "parse_run_config",
]
