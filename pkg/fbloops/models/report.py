"""Verification report model."""

from typing import Any, Optional

from pydantic import BaseModel, Field, computed_field


class Check(BaseModel):
    """One measured value against its expectation."""

    name: str
    measured: Any
    expected: Any = None
    tolerance: Optional[float] = None
    provenance: str = Field(default="DERIVED", description="THEORY, DERIVED or TRIVIAL")
    passed: bool


class ExperimentReport(BaseModel):
    """Inputs, checks and verdict of one verification experiment."""

    name: str
    inputs: dict[str, Any]
    measured: dict[str, Any] = Field(default_factory=dict)
    checks: list[Check] = Field(default_factory=list)
    runtime_s: float = 0.0

    @computed_field  # type: ignore[prop-decorator]
    @property
    def verdict(self) -> str:
        return "pass" if all(check.passed for check in self.checks) else "fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def summary_row(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "verdict": self.verdict,
            "checks": len(self.checks),
            "failed": sum(not check.passed for check in self.checks),
            "runtime_s": round(self.runtime_s, 3),
        }
