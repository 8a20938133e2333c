"""Verification results and their JSON form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass
class CheckResult:
    """One named check: a worst-case residual compared against a tolerance.

    ``max_residual`` is None when the check could not be evaluated; such a
    check never passes.
    """

    name: str
    max_residual: float | None
    tolerance: float
    note: str = ""
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = self.max_residual is not None and bool(self.max_residual <= self.tolerance)

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "max_residual": None if self.max_residual is None else float(self.max_residual),
            "tolerance": float(self.tolerance),
            "pass": self.passed,
        }
        if self.note:
            out["note"] = self.note
        return out

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        res = "n/a" if self.max_residual is None else f"{self.max_residual:.3e}"
        extra = f"  ({self.note})" if self.note else ""
        return f"[{status}] {self.name}: {res} <= {self.tolerance:.1e}{extra}"


@dataclass
class VerificationReport:
    space: str
    checks: list[CheckResult] = field(default_factory=list)
    seed: int | None = None
    trials: int | None = None
    assumed_connected: bool = True
    config: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failing(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "space": self.space,
            "checks": [c.to_dict() for c in self.checks],
            "seed": self.seed,
            "trials": self.trials,
            "assumed_connected": self.assumed_connected,
            "pass": self.passed,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"
