"""Audit records and their JSON/CSV serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

SCHEMA_VERSION = 1


@dataclass
class Check:
    """One numeric relation ``lhs <relation> rhs`` with a verdict.

    An inapplicable check carries ``holds=None`` and a note saying which
    hypothesis failed; it never counts as a failure.
    """

    name: str
    lhs: float | None
    relation: str
    rhs: float | None
    holds: bool | None
    note: str = ""

    @property
    def applicable(self) -> bool:
        return self.holds is not None


def compare(name: str, lhs: float, relation: str, rhs: float, tol: float = 1e-9, note: str = "") -> Check:
    """Build a check with relative slack ``tol * max(1, |lhs|, |rhs|)``."""
    slack = tol * max(1.0, abs(lhs), abs(rhs))
    if relation == "<=":
        ok = lhs <= rhs + slack
    elif relation == ">=":
        ok = lhs >= rhs - slack
    elif relation == "==":
        ok = abs(lhs - rhs) <= slack
    else:
        raise ValueError(f"unknown relation {relation!r}")
    return Check(name, float(lhs), relation, float(rhs), bool(ok), note)


def inapplicable(name: str, note: str) -> Check:
    return Check(name, None, "n/a", None, None, note)


@dataclass
class AuditReport:
    """Named quantities and checks for one audited object."""

    name: str
    quantities: dict = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.holds is not False for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.holds is False]

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "quantities": self.quantities,
            "checks": [
                {"name": c.name, "lhs": c.lhs, "relation": c.relation, "rhs": c.rhs, "holds": c.holds, "note": c.note}
                for c in self.checks
            ],
        }


def jsonable(obj):
    """Convert numpy scalars/arrays and non-finite floats into plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return jsonable(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n"


def rows_to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if row.get(k) is None else repr(row[k]) if isinstance(row.get(k), float) else row[k]) for k in columns})
    return buf.getvalue()
