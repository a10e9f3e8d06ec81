import csv
import json
import logging
import os
from abc import ABC, abstractmethod
from collections import OrderedDict, defaultdict
from datetime import datetime, timezone
from typing import Dict, List, Mapping, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class Row(BaseModel):
    """Values computed at one sample point for one frame"""

    index: int
    point: List[float]
    frame: Optional[str] = None
    quantities: Dict[str, float] = Field(default_factory=dict)
    residuals: Dict[str, float] = Field(default_factory=dict)
    terms: Dict[str, float] = Field(default_factory=dict)


class SummaryEntry(BaseModel):
    """Reduction of one identity over all rows"""

    identity: str
    count: int
    max: float
    mean: float
    budget: Optional[float] = None
    passed: bool = True


class Provenance(BaseModel):
    config_sha256: str
    seed: Optional[int] = None
    version: str
    frames: List[str] = Field(default_factory=list)
    orientations: Dict[str, List[int]] = Field(default_factory=dict)
    timestamp: str


class Report(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: int = Field(default=SCHEMA_VERSION, alias="schema")
    command: str
    rows: List[Row] = Field(default_factory=list)
    summary: List[SummaryEntry] = Field(default_factory=list)
    provenance: Provenance
    passed: bool = True

    def failures(self) -> List[SummaryEntry]:
        return [entry for entry in self.summary if not entry.passed]

    def entry(self, identity: str) -> SummaryEntry:
        for entry in self.summary:
            if entry.identity == identity:
                return entry
        raise KeyError(identity)


class RowStore(ABC):
    """Interface for per-point row storage"""

    @abstractmethod
    def add_row(self, row: Row) -> None:
        pass

    @abstractmethod
    def get_rows(self, frame: Optional[str] = None) -> List[Row]:
        pass

    @abstractmethod
    def get_residuals(self, identity: str) -> List[float]:
        pass

    @abstractmethod
    def get_frames(self) -> List[str]:
        pass


class InMemoryRowStore(RowStore):
    """In-memory row storage, rows grouped by frame and ordered by point index"""

    def __init__(self):
        self._rows: Dict[str, OrderedDict[int, Row]] = defaultdict(OrderedDict)
        self._frames: List[str] = []

    def add_row(self, row: Row) -> None:
        frame = row.frame or ""
        if frame not in self._frames:
            self._frames.append(frame)
        self._rows[frame][row.index] = row

    def get_rows(self, frame: Optional[str] = None) -> List[Row]:
        frames = self._frames if frame is None else [frame]
        rows: List[Row] = []
        for name in frames:
            stored = self._rows.get(name, {})
            rows.extend(stored[index] for index in sorted(stored))
        return rows

    def get_residuals(self, identity: str) -> List[float]:
        return [row.residuals[identity] for row in self.get_rows() if identity in row.residuals]

    def get_frames(self) -> List[str]:
        return [name for name in self._frames if name]

    def __len__(self) -> int:
        return sum(len(rows) for rows in self._rows.values())


def summarize(store: RowStore, budgets: Mapping[str, float]) -> List[SummaryEntry]:
    """One entry per residual name, in first-seen order; identities without a budget always pass."""
    identities: List[str] = []
    for row in store.get_rows():
        identities.extend(name for name in row.residuals if name not in identities)
    entries = []
    for identity in identities:
        values = np.array(store.get_residuals(identity), dtype=float)
        worst = float(values.max())
        budget = budgets.get(identity)
        passed = budget is None or bool(worst <= budget)
        if not passed:
            logger.warning("%s: max residual %.3e exceeds %.3e", identity, worst, budget)
        entries.append(
            SummaryEntry(
                identity=identity,
                count=len(values),
                max=worst,
                mean=float(values.mean()),
                budget=budget,
                passed=passed,
            )
        )
    return entries


def build_report(
    command: str,
    store: RowStore,
    budgets: Mapping[str, float],
    config_sha256: str,
    version: str,
    seed: Optional[int] = None,
    orientations: Optional[Mapping[str, List[int]]] = None,
    frames: Optional[List[str]] = None,
) -> Report:
    summary = summarize(store, budgets)
    provenance = Provenance(
        config_sha256=config_sha256,
        seed=seed,
        version=version,
        frames=list(frames) if frames is not None else store.get_frames(),
        orientations={k: sorted(set(v)) for k, v in (orientations or {}).items()},
        timestamp=datetime.now(timezone.utc).replace(microsecond=0).isoformat(),
    )
    return Report(
        command=command,
        rows=store.get_rows(),
        summary=summary,
        provenance=provenance,
        passed=all(entry.passed for entry in summary),
    )


def to_json(report: Report) -> str:
    return json.dumps(report.model_dump(mode="json", by_alias=True), indent=2)


def _ensure_directory(path: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)


def save_json(report: Report, path: str) -> None:
    """
    Write the full report as JSON.

    Args:
        report: The report to write.
        path: Destination file; missing directories are created.
    """
    _ensure_directory(path)
    with open(path, "w") as f:
        f.write(to_json(report))
        f.write("\n")
    logger.info("Report saved to %s", path)


CSV_PREFIXES = {"quantities": "quantity", "residuals": "residual", "terms": "term"}


def _csv_columns(rows: List[Row]) -> List[str]:
    columns = ["index", "frame", "z1", "z2"]
    for section, prefix in CSV_PREFIXES.items():
        for row in rows:
            for name in getattr(row, section):
                column = f"{prefix}:{name}"
                if column not in columns:
                    columns.append(column)
    return columns


def save_csv(report: Report, path: str) -> None:
    """One line per row; quantity, residual and term columns are prefixed with their section."""
    _ensure_directory(path)
    columns = _csv_columns(report.rows)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=columns, restval="")
        writer.writeheader()
        for row in report.rows:
            record: Dict[str, object] = {"index": row.index, "frame": row.frame or "", "z1": row.point[0]}
            record["z2"] = row.point[1] if len(row.point) > 1 else ""
            record.update({f"quantity:{k}": v for k, v in row.quantities.items()})
            record.update({f"residual:{k}": v for k, v in row.residuals.items()})
            record.update({f"term:{k}": v for k, v in row.terms.items()})
            writer.writerow(record)
    logger.info("Rows saved to %s", path)


def load_report(path: str) -> Report:
    with open(path, "r") as f:
        return Report.model_validate(json.load(f))
