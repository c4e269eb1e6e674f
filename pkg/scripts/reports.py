"""
Experiment reports: one JSON document per run plus comma-delimited tables.

A report written to `run.json` puts its tables next to it as
`run.json.<table>.csv`.
"""

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from scripts import config


def _cell(value):
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else str(value)
    if value is None:
        return ""
    return value


@dataclass
class Table:
    fields: list
    rows: list = field(default_factory=list)

    def add(self, *values):
        if len(values) != len(self.fields):
            raise ValueError(f"row has {len(values)} values, table has {len(self.fields)} columns")
        self.rows.append(list(values))

    def column(self, name):
        i = self.fields.index(name)
        return [row[i] for row in self.rows]

    def to_records(self):
        return [dict(zip(self.fields, row)) for row in self.rows]


@dataclass
class ExperimentReport:
    command: str
    config: dict
    tables: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    wall_clock: float = 0.0
    version: str = config.VERSION

    def table(self, name, fields):
        self.tables[name] = Table(list(fields))
        return self.tables[name]

    def to_dict(self):
        return {
            "command": self.command,
            "version": self.version,
            "config": self.config,
            "results": self.results,
            "fits": {name: fit.to_dict() for name, fit in self.fits.items()},
            "tables": {name: t.to_records() for name, t in self.tables.items()},
            "notes": self.notes,
            "wall_clock": self.wall_clock,
        }


def write_table(table, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(table.fields)
        for row in table.rows:
            w.writerow([_cell(v) for v in row])
    return path


def read_table(path):
    """Read a table back; numeric cells become int or float."""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        fields = next(reader)
        table = Table(fields)
        for row in reader:
            table.rows.append([_parse(v) for v in row])
    return table


def _parse(text):
    if text == "":
        return None
    for kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            pass
    return text


def write_report(report, path):
    """Write the JSON report and its tables; returns every path written."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, indent=2)
    written = [path]
    for name, table in report.tables.items():
        written.append(write_table(table, path.with_name(f"{path.name}.{name}.csv")))
    return written
