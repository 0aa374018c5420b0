"""Per-sigma parameter tables (one resolution per table)."""

import math
from dataclasses import dataclass, field

import numpy as np

TABLE_COLUMNS = (
    "sigma",
    "a",
    "b",
    "epsilon",
    "A_plus",
    "A_minus",
    "psi0",
    "k",
    "l",
    "I1",
    "I2",
    "I3",
    "H",
    "I",
    "N",
    "x_max",
)
# cell text for a tail coefficient below the floating floor
AT_FLOOR = "at_floor"


@dataclass
class ParameterTable:
    rows: list = field(default_factory=list)
    kind: str = "computed"

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        out = []
        for r in self.rows:
            v = r.get(name)
            out.append(math.nan if v is None else v)
        return np.array(out, dtype=float)

    def resolution(self):
        ns = {int(r["N"]) for r in self.rows}
        if len(ns) != 1:
            raise ValueError(f"table mixes resolutions {sorted(ns)}")
        return ns.pop()

    def validate(self):
        sig = self.column("sigma")
        if sig.size > 1 and not np.all(np.diff(sig) < 0):
            raise ValueError("sigma must be strictly decreasing within a table")
        if self.rows:
            self.resolution()
            if len({float(r["x_max"]) for r in self.rows}) != 1:
                raise ValueError("table mixes domain sizes")

    def sorted_desc(self):
        return ParameterTable(sorted(self.rows, key=lambda r: -r["sigma"]), self.kind)

    def points(self, name, transform=None):
        """(sigma, y) pairs for fitting, skipping non-finite entries."""
        sig = self.column("sigma")
        y = self.column(name) if transform is None else transform(self)
        keep = np.isfinite(y)
        return np.column_stack([sig[keep], y[keep]])


def row_from_report(report):
    row = {name: getattr(report, name) for name in TABLE_COLUMNS}
    if report.A_plus_at_floor:
        row["A_plus"] = None
    row["N"] = int(report.N)
    return row


def table_from_reports(reports):
    table = ParameterTable([row_from_report(r) for r in reports]).sorted_desc()
    table.validate()
    return table


__all__ = ["AT_FLOOR", "ParameterTable", "TABLE_COLUMNS", "row_from_report", "table_from_reports"]
