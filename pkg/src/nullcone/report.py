"""Run reports and their deterministic JSON / CSV serialization."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

__all__ = ["NormReport", "Check", "to_jsonable", "dumps_json", "emit_report", "read_json",
           "CSV_COLUMNS"]

CSV_COLUMNS = ("section", "name", "coordinate", "value")
FLOAT_DIGITS = 12


@dataclass
class Check:
    """One pass/fail verdict tied to an acceptance rule id."""

    rule: str
    passed: bool
    measured: float | str | None = None
    threshold: float | str | None = None
    detail: str = ""


@dataclass
class NormReport:
    """Norm values, per-cone traces, slope fits and rule verdicts of a run."""

    run_id: str
    values: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)
    slopes: dict = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add_check(self, rule: str, passed: bool, measured=None, threshold=None, detail="") -> Check:
        c = Check(rule, bool(passed), measured, threshold, detail)
        self.checks.append(c)
        return c

    def failing_rules(self) -> list[str]:
        return [c.rule for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {
            "run_id": self.run_id, "values": self.values, "traces": self.traces,
            "slopes": self.slopes, "meta": self.meta, "passed": self.passed,
            "checks": [c.__dict__ for c in self.checks],
        }


def _round(x: float) -> float | str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(f"{x:.{FLOAT_DIGITS}g}")


def to_jsonable(obj):
    """Convert numpy scalars/arrays, fractions and dataclasses to plain JSON types."""
    if isinstance(obj, NormReport):
        return to_jsonable(obj.as_dict())
    if isinstance(obj, Check):
        return to_jsonable(obj.__dict__)
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (float, np.floating)):
        return _round(float(obj))
    if isinstance(obj, complex):
        return [_round(obj.real), _round(obj.imag)]
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps_json(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n"


def _csv_rows(report: NormReport):
    for name, v in sorted(report.values.items()):
        yield ("value", name, "", v)
    for name, trace in sorted(report.traces.items()):
        for coord, v in zip(trace["coordinate"], trace["value"]):
            yield ("trace", name, coord, v)
    for name, fit in sorted(report.slopes.items()):
        yield ("slope", name, "", fit["slope"])
    for c in report.checks:
        yield ("check", c.rule, "", int(c.passed))


def dumps_csv(report: NormReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for sec, name, coord, v in _csv_rows(report):
        coord = "" if coord == "" else to_jsonable(coord)
        w.writerow([sec, name, coord, to_jsonable(v)])
    return buf.getvalue()


def emit_report(report: NormReport, path, fmt: str = "json") -> Path:
    """Write ``report`` to ``path`` as JSON or CSV; output is byte-stable."""
    if fmt not in ("json", "csv"):
        raise ValueError(f"unknown report format {fmt!r}")
    path = Path(path)
    text = dumps_json(report) if fmt == "json" else dumps_csv(report)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())
