"""
Numerical tolerances shared by invariant checks
"""

from dataclasses import dataclass

from .interfaces import InvalidInputException


@dataclass(frozen=True)
class Tolerances:
    """Tolerances for invariant assertions"""
    num_tol: float = 1e-9
    mass_tol: float = 1e-8

    def __post_init__(self):
        if self.num_tol <= 0 or self.mass_tol <= 0:
            raise InvalidInputException("tolerances must be positive")


DEFAULT_TOLERANCES = Tolerances()
