"""Unit-tagged tables written as CSV with provenance lines or as JSON records."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from .errors import SquidCouplerError

RECORD_VERSION = 1
NON_NUMERIC_UNITS = ("text", "bool")


class UnitSchemaError(SquidCouplerError, ValueError):
    """A column lacks a unit tag or a cell does not match its column type."""


@dataclass(frozen=True)
class Column:
    name: str
    unit: str   # "1" for dimensionless numbers, "bool" or "text" otherwise

    @property
    def header(self) -> str:
        return f"{self.name}[{self.unit}]"


@dataclass
class Table:
    name: str
    columns: Sequence[Column]
    rows: list[list[Any]] = field(default_factory=list)
    provenance: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        check_schema(self.columns)

    def add(self, *cells):
        if len(cells) != len(self.columns):
            raise UnitSchemaError(f"{self.name}: row has {len(cells)} cells, expected {len(self.columns)}")
        self.rows.append(list(cells))

    def column(self, name: str) -> list:
        idx = [c.name for c in self.columns].index(name)
        return [r[idx] for r in self.rows]


def check_schema(columns: Sequence[Column]) -> None:
    seen = set()
    for c in columns:
        if not c.unit or not c.unit.strip():
            raise UnitSchemaError(f"column {c.name!r} has no unit tag")
        if c.name in seen:
            raise UnitSchemaError(f"duplicate column {c.name!r}")
        seen.add(c.name)


def parse_header(cell: str) -> Column:
    if not (cell.endswith("]") and "[" in cell):
        raise UnitSchemaError(f"header cell {cell!r} has no unit tag")
    name, unit = cell[:-1].split("[", 1)
    if not unit:
        raise UnitSchemaError(f"header cell {cell!r} has an empty unit tag")
    return Column(name, unit)


def _cell(value, column: Column) -> str:
    if value is None:
        return ""
    if column.unit == "bool":
        return "true" if value else "false"
    if column.unit == "text":
        return str(value)
    return repr(float(value))


def to_csv(table: Table) -> str:
    buf = io.StringIO()
    for key in sorted(table.provenance):
        buf.write(f"# {key}: {table.provenance[key]}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([c.header for c in table.columns])
    for row in table.rows:
        w.writerow([_cell(v, c) for v, c in zip(row, table.columns)])
    return buf.getvalue()


def read_csv(text: str) -> Table:
    """Parse a table written by :func:`to_csv`; the header is schema-checked."""
    prov = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(": ")
            prov[key] = value
        else:
            body.append(line)
    reader = csv.reader(body)
    header = next(reader)
    columns = [parse_header(h) for h in header]
    table = Table("table", columns, provenance=prov)
    for raw in reader:
        cells = []
        for text_cell, c in zip(raw, columns):
            if text_cell == "":
                cells.append(None)
            elif c.unit == "bool":
                cells.append(text_cell == "true")
            elif c.unit == "text":
                cells.append(text_cell)
            else:
                cells.append(float(text_cell))
        table.rows.append(cells)
    return table


def _json_value(value, column: Column):
    if value is None:
        return None
    if column.unit in NON_NUMERIC_UNITS:
        return bool(value) if column.unit == "bool" else str(value)
    v = float(value)
    return v if math.isfinite(v) else None


def to_record(table: Table) -> str:
    payload = {
        "record_version": RECORD_VERSION,
        "name": table.name,
        "provenance": dict(sorted(table.provenance.items())),
        "columns": [{"name": c.name, "unit": c.unit} for c in table.columns],
        "rows": [[_json_value(v, c) for v, c in zip(r, table.columns)] for r in table.rows],
    }
    return json.dumps(payload, indent=1, sort_keys=True, allow_nan=False) + "\n"


def write_table(table: Table, directory: str | Path, formats: Sequence[str]) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in formats:
        if fmt == "csv":
            path, text = directory / f"{table.name}.csv", to_csv(table)
        elif fmt == "record":
            path, text = directory / f"{table.name}.json", to_record(table)
        else:
            raise ValueError(f"unknown format {fmt!r}")
        path.write_text(text, encoding="utf-8")
        written.append(path)
    return written


def format_aligned(table: Table, precision: int = 6) -> str:
    """Human-readable fixed-width rendering."""
    def show(v, c):
        if v is None:
            return "-"
        if c.unit in NON_NUMERIC_UNITS:
            return _cell(v, c)
        return f"{float(v):.{precision}g}"

    cells = [[c.header for c in table.columns]]
    cells += [[show(v, c) for v, c in zip(r, table.columns)] for r in table.rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(table.columns))]
    lines = ["  ".join(s.ljust(w) for s, w in zip(row, widths)).rstrip() for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


# units of every scalar the rate pipeline reports
QUANTITY_UNITS = {
    "phi_r_min": "rad", "phi_a_min": "rad", "delta": "rad",
    "E_J_c": "GHz", "E_L_r_tilde": "GHz", "E_L_a_tilde": "GHz",
    "omega_p_r": "GHz", "omega_p_a": "GHz", "omega_r_tilde": "GHz", "omega_a_tilde": "GHz",
    "omega_a_num": "GHz", "two_omega_r": "GHz",
    "phi_r_zpf": "1", "phi_a_zpf": "1", "n_r_zpf": "1", "n_a_zpf": "1",
    "mu": "1", "mu_full": "1", "lambda_a": "1", "lambda_r": "1",
}


def unit_of(name: str) -> str:
    """Rates default to MHz; everything else is listed explicitly."""
    if name in QUANTITY_UNITS:
        return QUANTITY_UNITS[name]
    if name.startswith(("small.",)):
        return "1"
    return "MHz"
