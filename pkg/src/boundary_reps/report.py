"""Report serialisation (CSV and JSON) and atomic file writes.

JSON reports look like::

    {"schema": 1, "version": ..., "command": ..., "config": {...},
     "id": ..., "params": {...}, "columns": [...], "rows": [...],
     "verdict": {...}, "extras": {...}}

CSV reports hold only the rows, with the column order fixed per command.
Floats are written with ``repr`` so the text round-trips exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

SCHEMA = 1


@dataclass
class Report:
    id: str
    columns: list
    rows: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    verdict: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.verdict.get("passed", False))


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if hasattr(x, "item") and not isinstance(x, (str, bytes)):
        x = x.item()
    if isinstance(x, complex):
        return [_clean(x.real), _clean(x.imag)]
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def _cell(x) -> str:
    if hasattr(x, "item"):
        x = x.item()
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    if x is None:
        return ""
    return str(x)


def to_csv(report: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(report.columns)
    for row in report.rows:
        w.writerow([_cell(row.get(c)) for c in report.columns])
    return buf.getvalue()


def to_json(report: Report, config: dict, version: str, command: str) -> str:
    doc = {
        "schema": SCHEMA,
        "version": version,
        "command": command,
        "config": config,
        "id": report.id,
        "params": report.params,
        "columns": list(report.columns),
        "rows": [{c: row.get(c) for c in report.columns} for row in report.rows],
        "verdict": report.verdict,
        "extras": report.extras,
    }
    return json.dumps(_clean(doc), indent=2, sort_keys=False) + "\n"


def error_json(exc: BaseException, code: int, version: str) -> str:
    err = {"type": type(exc).__name__, "message": str(exc), "exit_code": code}
    for attr in ("key", "line", "column"):
        val = getattr(exc, attr, None)
        if val is not None:
            err[attr] = val
    return json.dumps({"schema": SCHEMA, "version": version, "error": err}, indent=2) + "\n"


def write_atomic(path, text: str) -> Path:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path
