"""On-disk formats: profile column files, parameter tables, report records.

Every float is written with 17 significant digits (``%.16e``), which
round-trips IEEE doubles exactly, so write -> read -> write reproduces the
file byte for byte.  Writes go to a temporary file in the target directory
followed by a rename.
"""

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .equation import GridSpec, ProfileState
from .tables import AT_FLOOR, TABLE_COLUMNS, ParameterTable

FORMAT_VERSION = 1
FLOAT_FMT = "%.16e"
PROFILE_MAGIC = "# dnls-blowup profile"
PROFILE_HEADER = ("format_version", "sigma", "a", "b", "N", "x_max", "tol", "iterations", "residual")
_INT_FIELDS = {"format_version", "N", "iterations"}


class SchemaError(ValueError):
    """File content does not match the expected layout; names the field."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


def atomic_write_text(path, text):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt_float(x):
    return FLOAT_FMT % x


@dataclass
class ProfileFile:
    state: ProfileState
    grid: GridSpec
    tol: float = 1e-6
    iterations: int = 0
    residual: float = math.nan

    def header(self):
        return {
            "format_version": FORMAT_VERSION,
            "sigma": self.state.sigma,
            "a": self.state.a,
            "b": self.state.b,
            "N": self.grid.n,
            "x_max": self.grid.x_max,
            "tol": self.tol,
            "iterations": self.iterations,
            "residual": self.residual,
        }

    def to_text(self):
        lines = [PROFILE_MAGIC]
        for key, val in self.header().items():
            lines.append(f"# {key}: {val if key in _INT_FIELDS else fmt_float(val)}")
        lines.append("# columns: x u v f g")
        buf = io.StringIO()
        cols = np.column_stack([self.grid.x, self.state.u, self.state.v, self.state.f, self.state.g])
        np.savetxt(buf, cols, fmt=FLOAT_FMT, delimiter=" ")
        return "\n".join(lines) + "\n" + buf.getvalue()

    def write(self, path):
        atomic_write_text(path, self.to_text())
        return path


def _parse_header(lines):
    if not lines or lines[0].strip() != PROFILE_MAGIC:
        raise SchemaError("magic", "not a profile file")
    meta = {}
    for line in lines[1:]:
        body = line[1:].strip()
        key, sep, val = body.partition(":")
        if not sep:
            raise SchemaError("header", f"malformed line {line!r}")
        meta[key.strip()] = val.strip()
    out = {}
    for key in PROFILE_HEADER:
        if key not in meta:
            raise SchemaError(key, "missing from header")
        try:
            out[key] = int(meta[key]) if key in _INT_FIELDS else float(meta[key])
        except ValueError as exc:
            raise SchemaError(key, f"cannot parse {meta[key]!r}") from exc
    if out["format_version"] != FORMAT_VERSION:
        raise SchemaError("format_version", f"unsupported version {out['format_version']}")
    if meta.get("columns", "").split() != ["x", "u", "v", "f", "g"]:
        raise SchemaError("columns", f"expected 'x u v f g', got {meta.get('columns')!r}")
    return out


def read_profile(path):
    with open(path, encoding="ascii") as fh:
        text = fh.read()
    header_lines, body = [], []
    for line in text.splitlines():
        (header_lines if line.startswith("#") else body).append(line)
    meta = _parse_header(header_lines)
    try:
        data = np.loadtxt(body, dtype=float, ndmin=2) if body else np.empty((0, 5))
    except ValueError as exc:
        raise SchemaError("data", str(exc)) from exc
    if data.shape[1] != 5:
        raise SchemaError("columns", f"rows have {data.shape[1]} values, expected 5")
    if data.shape[0] != meta["N"] + 1:
        raise SchemaError("N", f"header says N={meta['N']} but file has {data.shape[0]} rows")
    grid = GridSpec(meta["N"], meta["x_max"])
    state = ProfileState(meta["sigma"], meta["a"], meta["b"], *(data[:, k].copy() for k in range(1, 5)))
    return ProfileFile(state, grid, meta["tol"], meta["iterations"], meta["residual"])


# ------------------------------------------------------------------ tables


def _cell(name, value):
    if name in ("N",):
        return str(int(value))
    if value is None:
        return AT_FLOOR if name == "A_plus" else "nan"
    return fmt_float(value)


def table_to_text(table, columns=TABLE_COLUMNS):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in table.rows:
        writer.writerow([_cell(c, row.get(c)) for c in columns])
    return buf.getvalue()


def write_table(table, path, columns=TABLE_COLUMNS):
    atomic_write_text(path, table_to_text(table, columns))
    return path


def read_table(path, columns=TABLE_COLUMNS):
    with open(path, encoding="ascii", newline="") as fh:
        reader = csv.reader(fh)
        try:
            head = next(reader)
        except StopIteration:
            raise SchemaError("header", "empty table file") from None
        missing = [c for c in columns if c not in head]
        if missing:
            raise SchemaError(missing[0], "column missing from table header")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(head):
                raise SchemaError("row", f"line {lineno} has {len(rec)} cells, expected {len(head)}")
            row = {}
            for name, cell in zip(head, rec):
                if name == "N":
                    row[name] = int(cell)
                elif cell == AT_FLOOR and name == "A_plus":
                    row[name] = None
                else:
                    try:
                        row[name] = float(cell)
                    except ValueError:
                        row[name] = cell
            rows.append(row)
    return ParameterTable(rows)


# ----------------------------------------------------------------- reports


def _json_value(key, val):
    if isinstance(val, dict):
        return {k: _json_value(k, v) for k, v in val.items()}
    if isinstance(val, (bool, np.bool_)):
        return bool(val)
    if isinstance(val, (int, np.integer)):
        return int(val)
    if val is None:
        return None
    val = float(val)
    if key == "A_plus" and not math.isfinite(val):
        return AT_FLOOR
    return val if math.isfinite(val) else str(val)


def report_to_json(report):
    data = {k: _json_value(k, v) for k, v in report.as_dict().items()}
    if report.A_plus_at_floor:
        data["A_plus"] = AT_FLOOR
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def write_report(report, path):
    atomic_write_text(path, report_to_json(report))
    return path


__all__ = [
    "FORMAT_VERSION",
    "PROFILE_HEADER",
    "ProfileFile",
    "SchemaError",
    "atomic_write_text",
    "read_profile",
    "read_table",
    "report_to_json",
    "table_to_text",
    "write_report",
    "write_table",
]
