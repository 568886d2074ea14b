"""Data products: named tables written as versioned CSV files.

Each CSV starts with ``#`` header lines (schema, column units, provenance)
followed by a plain CSV body. The body depends only on the data, so
identical configurations produce byte-identical bodies; the timestamp lives
in the header.
"""

from __future__ import annotations

import csv
import io
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__

SCHEMA_VERSION = "1"
KINDS = ("fig1a", "fig1b", "fig1b_inset", "fig2", "fig3a", "fig3b", "magnetization", "kz_sweep", "modes",
         "couplings", "exponents")


@dataclass(frozen=True, eq=False)
class Table:
    columns: tuple  # ((name, unit), ...)
    rows: list

    @property
    def names(self) -> list:
        return [c[0] for c in self.columns]

    def column(self, name: str) -> np.ndarray:
        i = self.names.index(name)
        vals = [r[i] for r in self.rows]
        try:
            return np.asarray(vals, dtype=float)
        except (TypeError, ValueError):
            return np.asarray(vals, dtype=object)

    def __len__(self):
        return len(self.rows)


@dataclass(eq=False)
class DataProduct:
    kind: str
    tables: dict  # table name -> Table; "main" for single-table products
    metadata: dict = field(default_factory=dict)  # scalar annotations written to the header
    config_hash: str = ""
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown product kind {self.kind!r}; known: {', '.join(KINDS)}")

    def filename(self, table: str) -> str:
        return f"{self.kind}.csv" if table == "main" else f"{self.kind}_{table}.csv"

    @property
    def empty(self) -> bool:
        return all(len(t) == 0 for t in self.tables.values())


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_body(table: Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.names)
    for row in table.rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def timestamp() -> str:
    """UTC timestamp; ``SOURCE_DATE_EPOCH`` pins it for reproducible builds."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = time.gmtime(int(epoch)) if epoch else time.gmtime()
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", t)


def csv_text(product: DataProduct, table: str) -> str:
    t = product.tables[table]
    head = [
        f"# schema: iontrap-xxz/{product.kind}/{table} v{product.schema_version}",
        "# units: " + ", ".join(f"{n} [{u}]" for n, u in t.columns),
        f"# provenance: config_hash={product.config_hash} code_version={__version__} timestamp={timestamp()}",
    ]
    head += [f"# {k}: {_cell(v)}" for k, v in sorted(product.metadata.items())]
    return "\n".join(head) + "\n" + csv_body(t)


def write_product(product: DataProduct, directory) -> list:
    """Write every table of ``product``; returns the written paths."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in product.tables:
        p = out / product.filename(name)
        p.write_text(csv_text(product, name), encoding="utf-8")
        paths.append(p)
    return paths


@dataclass(frozen=True, eq=False)
class ParsedCSV:
    header: dict
    units: dict
    table: Table
    body: str


def read_csv(path) -> ParsedCSV:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines(keepends=True)
    header, i = {}, 0
    while i < len(lines) and lines[i].startswith("#"):
        key, _, val = lines[i][1:].strip().partition(":")
        header[key.strip()] = val.strip()
        i += 1
    body = "".join(lines[i:])
    reader = list(csv.reader(io.StringIO(body)))
    names = reader[0] if reader else []
    units = {}
    for item in header.get("units", "").split(", "):
        if "[" in item:
            n, u = item.rsplit(" [", 1)
            units[n] = u.rstrip("]")
    rows = [[_parse_cell(c) for c in r] for r in reader[1:]]
    return ParsedCSV(header, units, Table(tuple((n, units.get(n, "")) for n in names), rows), body)


def _parse_cell(c: str):
    try:
        return float(c)
    except ValueError:
        return c
