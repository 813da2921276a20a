"""
Reporting utilities: table emission (JSON / CSV / text) and the
verification report model.
"""

import csv
import dataclasses
import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from errors import SchemaError
from group_ops import GroupElement
from literals import format_point

logger = logging.getLogger(__name__)

STATUSES = ('pass', 'fail', 'xfail', 'info')


def _plain(value: Any) -> Any:
    """Convert numpy and domain values into JSON-ready Python values."""
    if isinstance(value, GroupElement):
        return value.to_json()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _as_record(item: Any) -> Dict[str, Any]:
    if hasattr(item, 'to_dict'):
        record = item.to_dict()
    elif dataclasses.is_dataclass(item) and not isinstance(item, type):
        record = {f.name: getattr(item, f.name) for f in dataclasses.fields(item)}
    elif isinstance(item, Mapping):
        record = dict(item)
    else:
        raise SchemaError(f"Cannot emit a record of type {type(item).__name__}")
    return {str(k): _plain(v) for k, v in record.items()}


def _csv_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    if isinstance(value, (dict, list)):
        return json.dumps(value, separators=(",", ":"))
    return str(value)


def _text_cell(value: Any) -> str:
    if isinstance(value, float):
        return "%.12g" % value if math.isfinite(value) else str(value)
    return _csv_cell(value)


def normalize_records(records: Iterable[Any], columns: Optional[Sequence[str]] = None):
    """
    Turn records into plain dicts sharing one key set.

    Returns:
        (columns, rows)

    Raises:
        SchemaError if two records have different keys.
    """
    rows = [_as_record(item) for item in records]
    if columns is None:
        columns = list(rows[0]) if rows else []
    else:
        columns = list(columns)
    expected = set(columns)
    for index, row in enumerate(rows):
        if set(row) != expected:
            missing = sorted(expected - set(row))
            extra = sorted(set(row) - expected)
            raise SchemaError(f"Record {index} does not match the table schema "
                              f"(missing {missing}, unexpected {extra})")
    return columns, rows


def emit_table(records: Iterable[Any], fmt: str = 'json',
               columns: Optional[Sequence[str]] = None) -> str:
    """
    Render records as a JSON array, CSV with a header row, or aligned text.

    Records may be mappings, dataclasses or objects with `to_dict()`.
    CSV floats carry 17 significant digits; JSON floats use the shortest
    repr that round-trips. `columns` fixes the header (needed for an empty
    CSV table).

    Raises:
        SchemaError on mixed record schemas or an unknown format.
    """
    columns, rows = normalize_records(records, columns)

    if fmt == 'json':
        return json.dumps([{key: row[key] for key in columns} for row in rows], indent=2) + "\n"

    if fmt == 'csv':
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        if columns:
            writer.writerow(columns)
        for row in rows:
            writer.writerow([_csv_cell(row[key]) for key in columns])
        return buffer.getvalue()

    if fmt == 'text':
        cells = [[_text_cell(row[key]) for key in columns] for row in rows]
        widths = [max([len(col)] + [len(line[i]) for line in cells]) for i, col in enumerate(columns)]
        lines = ["  ".join(col.ljust(w) for col, w in zip(columns, widths)).rstrip()]
        for line in cells:
            lines.append("  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip())
        return "\n".join(lines) + "\n"

    raise SchemaError(f"Unknown output format '{fmt}', expected json, csv or text")


@dataclass
class CheckResult:
    """Outcome of one property check."""
    name: str
    module: str
    status: str
    measured: Optional[float] = None
    tolerance: Optional[float] = None
    witness: Optional[GroupElement] = None
    detail: str = ""

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"Unknown check status '{self.status}'")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "module": self.module,
            "status": self.status,
            "measured": None if self.measured is None else float(self.measured),
            "tolerance": None if self.tolerance is None else float(self.tolerance),
            "witness": format_point(self.witness) if self.witness is not None else None,
            "detail": self.detail,
        }


@dataclass
class VerifyReport:
    """All check results of one verification run, in execution order."""
    checks: List[CheckResult] = field(default_factory=list)
    seed: int = 0
    samples: int = 0

    def add(self, check: CheckResult):
        self.checks.append(check)

    @property
    def failed(self) -> List[CheckResult]:
        return [check for check in self.checks if check.status == 'fail']

    @property
    def passed(self) -> bool:
        return not self.failed

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def counts(self) -> Dict[str, int]:
        return {status: sum(1 for c in self.checks if c.status == status) for status in STATUSES}

    def to_records(self) -> List[Dict[str, Any]]:
        return [check.to_dict() for check in self.checks]

    def summary(self) -> str:
        counts = self.counts()
        return (f"{len(self.checks)} checks: {counts['pass']} pass, {counts['fail']} fail, "
                f"{counts['xfail']} expected failures, {counts['info']} informational")
