"""Structured verification results and their JSON schema."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import jsonschema
import numpy as np

STATUSES = ("pass", "fail", "indeterminate")

REPORT_SCHEMA = {
    "type": "object",
    "required": ["suite", "params", "cases", "meta"],
    "properties": {
        "suite": {"type": "string"},
        "params": {"type": "object"},
        "meta": {"type": "object"},
        "cases": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "status", "measured", "bound", "details"],
                "properties": {
                    "name": {"type": "string"},
                    "status": {"enum": list(STATUSES)},
                    "measured": {"type": ["number", "null"]},
                    "bound": {"type": ["number", "null"]},
                    "details": {"type": "object"},
                },
            },
        },
    },
}


def to_jsonable(obj):
    """Convert numpy scalars/arrays and non-finite floats into strict JSON values."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, complex):
        return [to_jsonable(obj.real), to_jsonable(obj.imag)]
    return obj


@dataclass
class Case:
    name: str
    status: str
    measured: float | None
    bound: float | None = None
    details: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if self.measured is not None and not math.isfinite(float(self.measured)):
            self.status = "fail" if self.status == "pass" else self.status
            self.details = dict(self.details, nonfinite=str(self.measured))
            self.measured = None
        if self.status == "pass" and self.bound is not None and self.measured is not None:
            if float(self.measured) > float(self.bound):
                raise AssertionError(f"case {self.name!r} marked pass with measured > bound")

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        return to_jsonable(
            {
                "name": self.name,
                "status": self.status,
                "measured": self.measured,
                "bound": self.bound,
                "details": self.details,
            }
        )


@dataclass
class ReportDoc:
    suite: str
    params: dict[str, Any]
    cases: list[Case]
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.cases)

    def to_dict(self) -> dict:
        cases = sorted((c.to_dict() for c in self.cases), key=lambda c: c["name"])
        return {
            "suite": self.suite,
            "params": to_jsonable(self.params),
            "cases": cases,
            "meta": to_jsonable(self.meta),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"


def validate_report(doc: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if ``doc`` is not a report document."""
    jsonschema.validate(doc, REPORT_SCHEMA)
