"""
Shared enums, result records and exceptions for the knowledge-growth solvers
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional


class ControlTag(Enum):
    """Which branch of the pointwise maximization produced a control"""
    ZERO_B = "zero_b"
    SATURATED = "saturated"
    INTERIOR = "interior"
    NO_GAIN = "no_gain"  # bounded alpha' (constant law): objective non-increasing in s


class RunMode(Enum):
    """Batch run modes of the command-line front end"""
    TD = "td"
    BGP = "bgp"
    KTRANSFORM = "ktransform"
    KPP = "kpp"
    ANALYTIC = "analytic"
    SWEEP = "sweep"


@dataclass
class InvariantOutcome:
    """Outcome of a single named invariant check"""
    name: str
    passed: bool
    value: Optional[float] = None
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "detail": self.detail,
        }


@dataclass
class InvariantReport:
    """Collection of invariant outcomes for one result object"""
    subject: str
    outcomes: List[InvariantOutcome] = field(default_factory=list)

    def add(self, name: str, passed: bool, value: Optional[float] = None,
            detail: str = "") -> None:
        self.outcomes.append(InvariantOutcome(name, bool(passed), value, detail))

    @property
    def all_passed(self) -> bool:
        return all(outcome.passed for outcome in self.outcomes)

    def failed(self) -> List[str]:
        return [outcome.name for outcome in self.outcomes if not outcome.passed]

    def __getitem__(self, name: str) -> InvariantOutcome:
        for outcome in self.outcomes:
            if outcome.name == name:
                return outcome
        raise KeyError(name)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "subject": self.subject,
            "all_passed": self.all_passed,
            "outcomes": [outcome.to_dict() for outcome in self.outcomes],
        }


class KnowledgeGrowthException(Exception):
    """Base exception for solver operations"""
    pass


class InvalidInputException(KnowledgeGrowthException, ValueError):
    """Raised when inputs are malformed"""
    pass


class DomainException(KnowledgeGrowthException, ValueError):
    """Raised when an argument lies outside the mathematical domain"""
    pass


class GridMismatchException(KnowledgeGrowthException):
    """Raised when profiles live on different grids"""
    pass


class SolverException(KnowledgeGrowthException):
    """Raised when a linear solve fails or returns non-finite values"""

    def __init__(self, message: str, dump: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.dump = dump or {}


class IntegrationException(KnowledgeGrowthException):
    """Raised when the K-equation integration violates an invariant"""

    def __init__(self, message: str, position: Optional[float] = None):
        super().__init__(message)
        self.position = position


class ExtrapolationException(KnowledgeGrowthException):
    """Raised when the tail of x~K has not saturated"""
    pass


class ConfigValidationException(KnowledgeGrowthException):
    """Raised when a run specification violates one or more constraints"""

    def __init__(self, errors: List[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)
