"""Experiment report containers and deterministic CSV/JSON emission.

CSV: comma separator, '.' decimal point, one header row, UTF-8, LF line
endings, floats in shortest round-trip form.  Timestamps appear only in
the JSON report so rerunning a config reproduces the tables byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .. import __version__

__all__ = ["Assertion", "Table", "ExperimentReport", "write_report"]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return v


@dataclass
class Assertion:
    """One checked quantity: measured value against a tolerance."""

    name: str
    measured: float
    tolerance: float
    passed: bool
    direction: str = "le"  # "le": measured <= tolerance; "ge": measured >= tolerance

    @classmethod
    def le(cls, name, measured, tolerance):
        return cls(name, float(measured), float(tolerance),
                   bool(measured <= tolerance), "le")

    @classmethod
    def ge(cls, name, measured, tolerance):
        return cls(name, float(measured), float(tolerance),
                   bool(measured >= tolerance), "ge")

    @classmethod
    def flag(cls, name, value: bool, expected: bool = True):
        return cls(name, float(bool(value)), float(bool(expected)),
                   bool(value) == bool(expected), "eq")


@dataclass
class Table:
    name: str
    columns: list
    rows: list = field(default_factory=list)

    def add(self, *row):
        if len(row) != len(self.columns):
            raise ValueError(f"table {self.name}: row width {len(row)} != {len(self.columns)}")
        self.rows.append(list(row))

    def to_csv_text(self) -> str:
        lines = [",".join(self.columns)]
        lines.extend(",".join(_fmt(v) for v in row) for row in self.rows)
        return "\n".join(lines) + "\n"


@dataclass
class ExperimentReport:
    scenario: str
    suite: str
    parameters: dict
    assertions: list = field(default_factory=list)
    tables: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def add_assertion(self, a: Assertion):
        self.assertions.append(a)
        return a

    def add_table(self, t: Table):
        self.tables.append(t)
        return t

    def to_json_dict(self, timestamp: str | None = None) -> dict:
        return {
            "scenario": self.scenario,
            "suite": self.suite,
            "parameters": _jsonable(self.parameters),
            "assertions": [
                {
                    "name": a.name,
                    "measured": a.measured,
                    "tolerance": a.tolerance,
                    "direction": a.direction,
                    "pass": a.passed,
                }
                for a in self.assertions
            ],
            "tables": [t.name for t in self.tables],
            "notes": list(self.notes),
            "passed": self.passed,
            "version": __version__,
            "timestamp": timestamp
            or datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }


def write_report(report: ExperimentReport, out_dir) -> Path:
    """Write report.json plus one CSV per table under out/<scenario>/<suite>/."""
    d = Path(out_dir) / report.scenario / report.suite
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "report.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report.to_json_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    for t in report.tables:
        with open(d / f"{t.name}.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(t.to_csv_text())
    return d
