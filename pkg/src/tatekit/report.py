"""Deterministic JSON reports: exact rationals as strings, sorted keys."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .scalars import LogNorm, format_fraction


def _default(obj: Any):
    if isinstance(obj, Fraction):
        return format_fraction(obj)
    if isinstance(obj, LogNorm):
        return obj.to_json()
    if hasattr(obj, "to_json"):
        return obj.to_json()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj: Any) -> str:
    return json.dumps(obj, default=_default, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


@dataclass
class Check:
    name: str
    passed: bool
    detail: Any = None

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class Report:
    command: str
    config: dict
    checks: list[Check] = field(default_factory=list)
    result: Any = None

    def check(self, name: str, passed: bool, detail: Any = None) -> bool:
        self.checks.append(Check(name, bool(passed), detail))
        return bool(passed)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def first_failure(self) -> str | None:
        return next((c.name for c in self.checks if not c.passed), None)

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "passed": self.passed,
            "first_failure": self.first_failure,
            "checks": [c.to_json() for c in self.checks],
            "result": self.result,
        }
