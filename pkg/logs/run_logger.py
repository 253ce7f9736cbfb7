"""
Run Logger
Per-run training/evaluation log written as one JSON file
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional

from app_core.errors import StorageError

logger = logging.getLogger(__name__)


def _finite_or_none(value: Optional[float]) -> Optional[float]:
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


class RunLogger:
    """Collects epoch, episode-window, case-study and event records for one run.

    The file carries no wall-clock fields so that a rerun with the same
    configuration writes the same bytes; timestamps go to the console log.
    """

    def __init__(self, run_name: str, logs_dir: Optional[Path] = None, *, config_hash: Optional[str] = None):
        self.run_name = run_name
        self.config_hash = config_hash
        self.logs_dir = Path(logs_dir) if logs_dir is not None else None
        self.log_file = None if self.logs_dir is None else self.logs_dir / f"{run_name}.json"
        self.logs: List[Dict[str, Any]] = []
        self._record_counter = 0
        logger.info("Run logger initialized for %s", run_name)
        if self.log_file is not None:
            logger.info("Log file: %s", self.log_file)

    def _append(self, record: Dict[str, Any]) -> Dict[str, Any]:
        self._record_counter += 1
        record = {"record": self._record_counter, **record}
        self.logs.append(record)
        return record

    def log_epoch(self, epoch: int, loss: float, train_accuracy: Optional[float] = None,
                  val_accuracy: Optional[float] = None) -> None:
        """Behavior-cloning epoch summary."""

        self._append({
            "type": "epoch",
            "epoch": epoch,
            "loss": _finite_or_none(loss),
            "train_accuracy": _finite_or_none(train_accuracy),
            "val_accuracy": _finite_or_none(val_accuracy),
        })
        logger.info("epoch %d loss=%.6f train_acc=%s val_acc=%s", epoch, loss, train_accuracy, val_accuracy)

    def log_episode_window(self, episode: int, epsilon: float, mean_reward: float,
                           loss: Optional[float] = None, success_rate: Optional[float] = None) -> None:
        """DQN progress over the last window of episodes."""

        self._append({
            "type": "episodes",
            "episode": episode,
            "epsilon": _finite_or_none(epsilon),
            "mean_reward": _finite_or_none(mean_reward),
            "loss": _finite_or_none(loss),
            "success_rate": _finite_or_none(success_rate),
        })
        logger.info("episode %d eps=%.3f mean_reward=%.4f loss=%s", episode, epsilon, mean_reward, loss)

    def log_case_study(self, record: Dict[str, Any]) -> None:
        """One replayed episode: decisions, outcomes and per-trial distributions."""

        self._append({"type": "case_study", **record})
        logger.info("case %s episode %s: %s", record.get("policy"), record.get("episode"), record.get("decisions"))

    def log_event(self, event: str, details: Optional[Dict[str, Any]] = None, error: Optional[str] = None) -> None:
        self._append({"type": "event", "event": event, "details": details or {}, "error": error})
        if error:
            logger.error("%s: %s", event, error)
        else:
            logger.info("Event %s %s", event, details or "")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "run_name": self.run_name,
            "config_hash": self.config_hash,
            "total_records": self._record_counter,
            "logs": self.logs,
        }

    def save(self) -> Optional[Path]:
        """Write the log file; a run without a log directory keeps records in memory only."""

        if self.log_file is None:
            return None
        try:
            self.log_file.parent.mkdir(parents=True, exist_ok=True)
            with open(self.log_file, "w", encoding="utf-8") as handle:
                json.dump(self.to_dict(), handle, ensure_ascii=False, indent=2, sort_keys=True)
                handle.write("\n")
        except OSError as exc:
            raise StorageError(f"failed to write run log {self.log_file}: {exc}") from exc
        return self.log_file

    def get_summary(self) -> Dict[str, Any]:
        epochs = [log for log in self.logs if log["type"] == "epoch"]
        windows = [log for log in self.logs if log["type"] == "episodes"]
        cases = [log for log in self.logs if log["type"] == "case_study"]
        errors = [log for log in self.logs if log.get("error")]
        return {
            "run_name": self.run_name,
            "total_epochs": len(epochs),
            "total_windows": len(windows),
            "total_case_studies": len(cases),
            "total_errors": len(errors),
            "final_loss": epochs[-1]["loss"] if epochs else (windows[-1]["loss"] if windows else None),
            "log_file": None if self.log_file is None else str(self.log_file),
        }
