"""Append-only run history with JSONL persistence and a manifest sidecar.

Each evaluation becomes one self-describing JSON line; the manifest records
the run configuration, pool hash, and schema version. Serialization is
deterministic (sorted keys, shortest-round-trip floats) so identical runs
produce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import HistoryError
from .pareto import ObjectiveVector, ParetoFront, non_dominated_set

SCHEMA_VERSION = "1.0"
HISTORY_FILENAME = "history.jsonl"
MANIFEST_FILENAME = "manifest.json"

PHASE_INIT = "init"
PHASE_BO = "bo"


@dataclass(frozen=True, eq=False)
class HistoryRecord:
    """One evaluated configuration with its provenance."""

    index: int
    phase: str
    iteration: int
    team: dict[str, str]
    features: np.ndarray  # roles x dims, normalized resolved rows
    accuracy: float
    cost_usd: float
    tokens: dict | None = None
    wall_seconds: float | None = None
    proposal: np.ndarray | None = None  # flat continuous point (bo phase only)
    acquisition_value: float | None = None
    gp_params: dict | None = None  # hyperparameter snapshot (bo phase only)
    timestamp: str | None = None

    def objective(self) -> ObjectiveVector:
        return ObjectiveVector(accuracy=self.accuracy, neg_cost=-self.cost_usd)

    def to_json_line(self) -> str:
        doc = {
            "index": self.index,
            "phase": self.phase,
            "iteration": self.iteration,
            "team": self.team,
            "features": [[float(v) for v in row] for row in np.atleast_2d(self.features)],
            "accuracy": float(self.accuracy),
            "cost_usd": float(self.cost_usd),
            "tokens": self.tokens,
            "wall_seconds": self.wall_seconds,
            "proposal": None if self.proposal is None else [float(v) for v in self.proposal],
            "acquisition_value": self.acquisition_value,
            "gp_params": self.gp_params,
            "timestamp": self.timestamp,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json_dict(cls, doc: dict) -> "HistoryRecord":
        return cls(
            index=int(doc["index"]),
            phase=str(doc["phase"]),
            iteration=int(doc["iteration"]),
            team=dict(doc["team"]),
            features=np.asarray(doc["features"], dtype=float),
            accuracy=float(doc["accuracy"]),
            cost_usd=float(doc["cost_usd"]),
            tokens=doc.get("tokens"),
            wall_seconds=doc.get("wall_seconds"),
            proposal=None if doc.get("proposal") is None else np.asarray(doc["proposal"], float),
            acquisition_value=doc.get("acquisition_value"),
            gp_params=doc.get("gp_params"),
            timestamp=doc.get("timestamp"),
        )


@dataclass
class RunHistory:
    """Ordered records plus the manifest describing how they were produced."""

    manifest: dict
    records: list[HistoryRecord] = field(default_factory=list)

    def append(self, record: HistoryRecord) -> None:
        if record.index != len(self.records):
            raise HistoryError(
                f"record index {record.index} does not continue history of "
                f"{len(self.records)} records"
            )
        self.records.append(record)

    def phase_records(self, phase: str) -> list[HistoryRecord]:
        return [r for r in self.records if r.phase == phase]

    def objectives(self) -> list[ObjectiveVector]:
        return [r.objective() for r in self.records]

    def feature_matrix(self) -> np.ndarray:
        """Flattened resolved features, one row per record (GP training inputs)."""
        return np.vstack([r.features.reshape(-1) for r in self.records])

    def final_front(self) -> ParetoFront:
        return non_dominated_set(self.objectives())


class HistoryWriter:
    """Streams records to ``<dir>/history.jsonl`` and maintains the manifest."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.history_path = self.out_dir / HISTORY_FILENAME
        self.manifest_path = self.out_dir / MANIFEST_FILENAME

    def write_manifest(self, manifest: dict) -> None:
        self.manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")

    def append(self, record: HistoryRecord) -> None:
        with open(self.history_path, "a") as fh:
            fh.write(record.to_json_line() + "\n")


def load_history(source) -> RunHistory:
    """Load a run directory (or a history file with a manifest beside it).

    Raises HistoryError for missing files or corrupt lines, naming the line.
    """
    source = Path(source)
    if source.is_dir():
        history_path = source / HISTORY_FILENAME
        manifest_path = source / MANIFEST_FILENAME
    else:
        history_path = source
        manifest_path = source.parent / MANIFEST_FILENAME
    if not history_path.exists():
        raise HistoryError(f"history file not found: {history_path}")

    if manifest_path.exists():
        try:
            manifest = json.loads(manifest_path.read_text())
        except json.JSONDecodeError as err:
            raise HistoryError(f"manifest {manifest_path} is corrupt: {err}") from None
    else:
        manifest = {"schema_version": SCHEMA_VERSION}
    major = str(manifest.get("schema_version", SCHEMA_VERSION)).split(".")[0]
    if major != SCHEMA_VERSION.split(".")[0]:
        raise HistoryError(
            f"history schema version {manifest.get('schema_version')} is not supported"
        )

    history = RunHistory(manifest=manifest)
    with open(history_path) as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                record = HistoryRecord.from_json_dict(doc)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                raise HistoryError(
                    f"history line {line_no} of {history_path} is corrupt"
                ) from None
            try:
                history.append(record)
            except HistoryError as err:
                raise HistoryError(f"history line {line_no} of {history_path}: {err}") from None
    return history


def history_from_replay_table(table) -> RunHistory:
    """Wrap a replay table as a bare init-phase history (for the analysis path).

    Feature rows are unknown to the table, so they are stored as an empty
    matrix; analyses that need surrogate inputs are unavailable on such
    histories.
    """
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "roles": list(table.roles),
        "n_init": len(table.rows),
        "n_iterations": 0,
        "source": "replay-table",
    }
    history = RunHistory(manifest=manifest)
    for i, (key, accuracy, cost) in enumerate(table.rows):
        history.append(
            HistoryRecord(
                index=i,
                phase=PHASE_INIT,
                iteration=i + 1,
                team=dict(zip(table.roles, key)),
                features=np.zeros((len(table.roles), 0)),
                accuracy=accuracy,
                cost_usd=cost,
            )
        )
    return history
