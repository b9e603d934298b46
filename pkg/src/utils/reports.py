"""Verdict reports shared by the library checks and the CLI."""

import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional

import yaml


def to_plain(value: Any) -> Any:
    """Convert ring values, sections and containers into JSON-ready data."""
    if isinstance(value, bool) or value is None or isinstance(value, (str, int, float)):
        return value
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}" if value.denominator != 1 else str(value.numerator)
    if hasattr(value, "to_json"):
        return value.to_json()
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        return [to_plain(v) for v in value]
    return str(value)


@dataclass
class Check:
    """One named check with its outcome and an optional witness."""
    name: str
    passed: bool
    witness: Optional[Dict[str, Any]] = None
    note: str = ""

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"name": self.name, "passed": self.passed}
        if self.witness is not None:
            out["witness"] = to_plain(self.witness)
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class Verdict:
    """Pass/fail per check plus free-form data and timing."""
    command: str
    checks: List[Check] = field(default_factory=list)
    data: Dict[str, Any] = field(default_factory=dict)
    elapsed: float = 0.0
    _started: float = field(default_factory=time.time, repr=False)

    def add(self, name: str, passed: bool, witness: Optional[Dict[str, Any]] = None, note: str = "") -> Check:
        check = Check(name, bool(passed), witness, note)
        self.checks.append(check)
        return check

    def extend(self, other: "Verdict", prefix: str = "") -> None:
        for check in other.checks:
            self.checks.append(Check(prefix + check.name, check.passed, check.witness, check.note))
        for key, value in other.data.items():
            self.data[prefix + key] = value

    def check(self, name: str) -> Optional[Check]:
        return next((c for c in self.checks if c.name == name), None)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]

    def finish(self) -> "Verdict":
        self.elapsed = time.time() - self._started
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "data": to_plain(self.data),
            "elapsed": round(self.elapsed, 4),
        }

    def dump(self, output_format: str = "json") -> str:
        payload = self.to_dict()
        if output_format == "yaml":
            return yaml.safe_dump(payload, sort_keys=False, allow_unicode=True)
        return json.dumps(payload, indent=2, ensure_ascii=False)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1
