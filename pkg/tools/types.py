from dataclasses import dataclass
from enum import Enum
from typing import Optional


class CheckStatus(Enum):
    PASSED = "passed"
    FAILED = "failed"
    SKIPPED = "skipped"
    UNASSERTED = "unasserted"

    @classmethod
    def from_string(cls, value: str) -> "CheckStatus":
        try:
            return cls(value.lower())
        except ValueError:
            raise ValueError(f"Invalid check status value: {value}")


class ConstraintMode(Enum):
    FULL = "full"
    RELAXED = "relaxed"

    @classmethod
    def from_string(cls, value: str) -> "ConstraintMode":
        try:
            return cls(value.lower())
        except ValueError:
            raise ValueError(f"Invalid constraint mode value: {value}")


class AverageHalf(Enum):
    ALL = "all"
    FIRST_HALF = "first-half"

    @classmethod
    def from_string(cls, value: str) -> "AverageHalf":
        try:
            return cls(value.lower().replace("_", "-"))
        except ValueError:
            raise ValueError(f"Invalid averaging mode value: {value}")


class Command(Enum):
    WEAK = "weak"
    SWEEP = "sweep"
    VERIFY = "verify"
    HV_SOLVE = "hv-solve"
    REPRODUCE = "reproduce"

    @classmethod
    def from_string(cls, value: str) -> "Command":
        try:
            return cls(value.lower().replace("_", "-"))
        except ValueError:
            raise ValueError(f"Invalid command value: {value}")


@dataclass(frozen=True)
class CheckReport:
    check_name: str
    max_residual: float
    tolerance: float
    status: CheckStatus
    witness: Optional[dict] = None

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance

    @property
    def asserted(self) -> bool:
        return self.status in (CheckStatus.PASSED, CheckStatus.FAILED)

    @classmethod
    def graded(
        cls,
        check_name: str,
        max_residual: float,
        tolerance: float,
        witness: Optional[dict] = None,
        asserted: bool = True,
    ) -> "CheckReport":
        if not asserted:
            status = CheckStatus.UNASSERTED
        elif max_residual <= tolerance:
            status = CheckStatus.PASSED
        else:
            status = CheckStatus.FAILED
        return cls(check_name, float(max_residual), float(tolerance), status, witness)

    @classmethod
    def skipped(
        cls,
        check_name: str,
        max_residual: float,
        tolerance: float,
        witness: Optional[dict] = None,
    ) -> "CheckReport":
        return cls(
            check_name, float(max_residual), float(tolerance), CheckStatus.SKIPPED, witness
        )

    def to_dict(self):
        return {
            "check": self.check_name,
            "status": self.status.value,
            "pass": self.passed,
            "skipped": self.status is CheckStatus.SKIPPED,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "witness": self.witness,
        }

    @classmethod
    def from_dict(cls, input: dict) -> "CheckReport":
        return cls(
            check_name=input["check"],
            max_residual=float(input["max_residual"]),
            tolerance=float(input["tolerance"]),
            status=CheckStatus.from_string(input["status"]),
            witness=input.get("witness"),
        )
