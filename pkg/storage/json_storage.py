"""Datasets, checkpoints and reports as canonical JSON (and CSV) files."""

from __future__ import annotations

import base64
import binascii
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from app_core.errors import CheckpointError, ConsistencyError, StorageError
from evaluation.metrics import CSV_COLUMNS, MetricsReport
from numkit.params import ParamSet
from policies.networks import ArchitectureSpec
from policies.weights import PolicyWeights
from tasks.families import TaskFamily
from tasks.types import TaskInstance

logger = logging.getLogger(__name__)

DATASET_MAGIC = "FAR-DATASET"
CHECKPOINT_MAGIC = "FAR-CHECKPOINT"
FORMAT_VERSION = 1
BLOB_DTYPE = "<f8"


@dataclass
class Checkpoint:
    weights: PolicyWeights
    config: Dict[str, Any] = field(default_factory=dict)
    metrics: Dict[str, Any] = field(default_factory=dict)
    path: Optional[Path] = None


@dataclass
class Dataset:
    kind: str
    config: Dict[str, Any]
    seed: int
    records: List[Dict[str, Any]]
    path: Optional[Path] = None

    @property
    def count(self) -> int:
        return len(self.records)


def canonical_json(payload: Any) -> str:
    """Sorted keys, two-space indent, shortest round-trip floats, trailing newline."""

    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _make_serializable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _make_serializable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_make_serializable(item) for item in obj]
    if isinstance(obj, np.ndarray):
        return [_make_serializable(item) for item in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


# ----------------------------------------------------------------------
# Parameter blobs
# ----------------------------------------------------------------------
def encode_blob(name: str, array: np.ndarray, trainable: bool) -> Dict[str, Any]:
    raw = np.ascontiguousarray(array, dtype=BLOB_DTYPE).tobytes(order="C")
    return {
        "name": name,
        "shape": list(array.shape),
        "dtype": BLOB_DTYPE,
        "trainable": trainable,
        "data": base64.b64encode(raw).decode("ascii"),
        "sha256": hashlib.sha256(raw).hexdigest(),
    }


def decode_blob(blob: Dict[str, Any]) -> np.ndarray:
    name = blob.get("name", "?")
    if blob.get("dtype") != BLOB_DTYPE:
        raise CheckpointError(f"parameter {name!r}: dtype {blob.get('dtype')!r}, expected {BLOB_DTYPE!r}")
    try:
        shape = tuple(int(n) for n in blob["shape"])
        raw = base64.b64decode(blob["data"], validate=True)
    except KeyError as exc:
        raise CheckpointError(f"parameter {name!r}: missing field {exc}") from exc
    except (binascii.Error, TypeError, ValueError) as exc:
        raise CheckpointError(f"parameter {name!r}: corrupt shape or base64 payload") from exc
    expected = int(np.prod(shape)) * 8
    if len(raw) != expected:
        raise CheckpointError(f"parameter {name!r}: blob has {len(raw)} bytes, expected {expected} for shape {shape}")
    digest = hashlib.sha256(raw).hexdigest()
    if digest != blob.get("sha256"):
        raise CheckpointError(f"parameter {name!r}: checksum {digest[:12]} does not match {str(blob.get('sha256'))[:12]}")
    return np.frombuffer(raw, dtype=BLOB_DTYPE).astype(np.float64).reshape(shape)


def checkpoint_payload(weights: PolicyWeights, config: Dict[str, Any], metrics: Dict[str, Any]) -> Dict[str, Any]:
    return {
        "magic": CHECKPOINT_MAGIC,
        "format_version": FORMAT_VERSION,
        "architecture": weights.spec.model_dump(mode="json"),
        "config": config,
        "shared": list(weights.shared_partition),
        "metrics": _make_serializable(metrics),
        "params": [
            encode_blob(name, weights.params[name], weights.params.is_trainable(name)) for name in weights.params
        ],
    }


def weights_from_payload(payload: Dict[str, Any], source: str = "checkpoint") -> Checkpoint:
    if not isinstance(payload, dict) or payload.get("magic") != CHECKPOINT_MAGIC:
        found = payload.get("magic") if isinstance(payload, dict) else type(payload).__name__
        raise CheckpointError(f"{source}: magic {found!r}, expected {CHECKPOINT_MAGIC!r}")
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{source}: format version {version!r}, expected {FORMAT_VERSION}")
    try:
        spec = ArchitectureSpec.model_validate(payload["architecture"])
        blobs = payload["params"]
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"{source}: malformed header: {exc}") from exc
    arrays = {}
    flags = {}
    try:
        for blob in blobs:
            arrays[blob["name"]] = decode_blob(blob)
            flags[blob["name"]] = bool(blob.get("trainable", True))
        weights = PolicyWeights(spec, ParamSet(arrays, flags))
    except (AttributeError, ConsistencyError, KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"{source}: malformed parameter entry: {exc!r}") from exc
    if list(weights.shared_partition) != list(payload.get("shared", [])):
        raise CheckpointError(f"{source}: shared partition does not match the stored parameter names")
    return Checkpoint(weights=weights, config=payload.get("config", {}), metrics=payload.get("metrics", {}))


class JSONStorage:
    """Output directory with ``data/``, ``checkpoints/``, ``reports/``, ``logs/`` and ``plots/``."""

    SUBDIRS = ("data", "checkpoints", "reports", "logs", "plots")

    def __init__(self, storage_dir: str | Path = "runs"):
        self.storage_dir = Path(storage_dir)
        self.data_dir = self.storage_dir / "data"
        self.checkpoints_dir = self.storage_dir / "checkpoints"
        self.reports_dir = self.storage_dir / "reports"
        self.logs_dir = self.storage_dir / "logs"
        self.plots_dir = self.storage_dir / "plots"

    def ensure_dirs(self) -> None:
        try:
            for name in self.SUBDIRS:
                (self.storage_dir / name).mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageError(f"cannot create output directory {self.storage_dir}: {exc}") from exc

    def _write_text(self, filepath: Path, text: str) -> Path:
        try:
            filepath.parent.mkdir(parents=True, exist_ok=True)
            with open(filepath, "w", encoding="utf-8", newline="\n") as file:
                file.write(text)
        except OSError as exc:
            raise StorageError(f"cannot write {filepath}: {exc}") from exc
        logger.info("Saved %s", filepath)
        return filepath

    def _read_json(self, filepath: Path, error=StorageError) -> Any:
        try:
            with open(filepath, "r", encoding="utf-8") as file:
                return json.load(file)
        except json.JSONDecodeError as exc:
            raise error(f"{filepath}: truncated or malformed JSON ({exc.msg} at byte {exc.pos})") from exc
        except OSError as exc:
            raise StorageError(f"cannot read {filepath}: {exc}") from exc

    # ------------------------------------------------------------------
    # Datasets
    # ------------------------------------------------------------------
    def save_dataset(
        self,
        name: str,
        family: TaskFamily,
        instances: Iterable[TaskInstance],
        config: Dict[str, Any],
        seed: int,
    ) -> Path:
        records = [family.to_record(instance) for instance in instances]
        payload = {
            "magic": DATASET_MAGIC,
            "format_version": FORMAT_VERSION,
            "kind": family.kind,
            "config": config,
            "seed": seed,
            "count": len(records),
            "records": _make_serializable(records),
        }
        return self._write_text(self.data_dir / f"{name}.json", canonical_json(payload))

    def load_dataset(self, filepath: str | Path) -> Dataset:
        filepath = Path(filepath)
        payload = self._read_json(filepath)
        if not isinstance(payload, dict) or payload.get("magic") != DATASET_MAGIC:
            raise StorageError(f"{filepath}: not a dataset file (magic {DATASET_MAGIC!r} missing)")
        if payload.get("format_version") != FORMAT_VERSION:
            raise StorageError(f"{filepath}: dataset version {payload.get('format_version')!r}, expected {FORMAT_VERSION}")
        records = payload.get("records", [])
        if len(records) != payload.get("count"):
            raise StorageError(f"{filepath}: header count {payload.get('count')} but {len(records)} records")
        logger.info("Dataset loaded: %s (%d records)", filepath, len(records))
        return Dataset(payload["kind"], payload.get("config", {}), int(payload.get("seed", 0)), records, filepath)

    # ------------------------------------------------------------------
    # Checkpoints
    # ------------------------------------------------------------------
    def save_checkpoint(
        self,
        name: str,
        weights: PolicyWeights,
        config: Dict[str, Any],
        metrics: Optional[Dict[str, Any]] = None,
    ) -> Path:
        payload = checkpoint_payload(weights, config, metrics or {})
        return self._write_text(self.checkpoints_dir / f"{name}.json", canonical_json(payload))

    def load_checkpoint(self, filepath: str | Path) -> Checkpoint:
        filepath = Path(filepath)
        payload = self._read_json(filepath, error=CheckpointError)
        checkpoint = weights_from_payload(payload, str(filepath))
        checkpoint.path = filepath
        logger.info("Checkpoint loaded: %s (%s)", filepath, checkpoint.weights.architecture)
        return checkpoint

    # ------------------------------------------------------------------
    # Reports
    # ------------------------------------------------------------------
    def save_reports(self, name: str, reports: Sequence[MetricsReport], config: Dict[str, Any]) -> tuple[Path, Path]:
        """CSV with the report columns plus a JSON mirror carrying the config echo."""

        frame = pd.DataFrame([report.to_row() for report in reports], columns=list(CSV_COLUMNS))
        csv_path = self.reports_dir / f"{name}.csv"
        try:
            csv_path.parent.mkdir(parents=True, exist_ok=True)
            frame.to_csv(csv_path, index=False, encoding="utf-8", lineterminator="\n", float_format="%.17g")
        except OSError as exc:
            raise StorageError(f"cannot write {csv_path}: {exc}") from exc
        logger.info("Results exported to CSV: %s", csv_path)
        payload = {
            "config": config,
            "columns": list(CSV_COLUMNS),
            "rows": [_make_serializable(report.model_dump(mode="json")) for report in reports],
        }
        json_path = self._write_text(self.reports_dir / f"{name}.json", canonical_json(payload))
        return csv_path, json_path

    def load_report_csv(self, filepath: str | Path) -> pd.DataFrame:
        try:
            frame = pd.read_csv(filepath)
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
            raise StorageError(f"cannot read report {filepath}: {exc}") from exc
        missing = [column for column in CSV_COLUMNS if column not in frame.columns]
        if missing:
            raise StorageError(f"{filepath}: report lacks columns {missing}")
        return frame

    def list_report_csvs(self) -> List[Path]:
        """Report CSVs under ``reports/``, sorted by name."""

        if not self.reports_dir.is_dir():
            return []
        found = sorted(self.reports_dir.glob("*.csv"))
        logger.info("Found %d report CSVs in %s", len(found), self.reports_dir)
        return found

    # ------------------------------------------------------------------
    # Case studies
    # ------------------------------------------------------------------
    def load_case_studies(self, filepath: str | Path) -> List[Dict[str, Any]]:
        """Case-study records of a run log written by the ``trace`` command."""

        filepath = Path(filepath)
        payload = self._read_json(filepath)
        records = payload.get("logs", []) if isinstance(payload, dict) else []
        cases = [record for record in records if isinstance(record, dict) and record.get("type") == "case_study"]
        if not cases:
            raise StorageError(f"{filepath}: no case-study records")
        logger.info("Loaded %d case studies from %s", len(cases), filepath)
        return cases


__all__ = [
    "CHECKPOINT_MAGIC",
    "Checkpoint",
    "DATASET_MAGIC",
    "Dataset",
    "FORMAT_VERSION",
    "JSONStorage",
    "canonical_json",
    "checkpoint_payload",
    "decode_blob",
    "encode_blob",
    "weights_from_payload",
]
