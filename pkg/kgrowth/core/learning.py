"""
Learning functions: the interaction probability alpha(s) of an agent
spending a fraction s of its time learning
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import optimize

from ..interfaces import DomainException, InvalidInputException

_S_TOL = 1e-12


def _check_unit_interval(s) -> np.ndarray:
    arr = np.asarray(s, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainException(f"learning fraction must lie in [0, 1], got {s}")
    return arr


def _unwrap(arr: np.ndarray):
    return float(arr) if np.ndim(arr) == 0 else arr


class LearningLaw(ABC):
    """Interface for learning functions alpha: [0, 1] -> R+"""

    alpha0: float

    @abstractmethod
    def value(self, s):
        """alpha(s), vectorised"""
        pass

    @abstractmethod
    def derivative(self, s):
        """alpha'(s), vectorised; +inf where unbounded"""
        pass

    def evaluate(self, s: float) -> Tuple[float, float]:
        """Return (alpha(s), alpha'(s)) for a scalar s in [0, 1]"""
        _check_unit_interval(s)
        return float(self.value(s)), float(self.derivative(s))

    @property
    def alpha_one(self) -> float:
        return float(self.value(1.0))

    @property
    def derivative_one(self) -> float:
        return float(self.derivative(1.0))

    @property
    def is_constant(self) -> bool:
        return False

    def solve_marginal(self, ratio: float) -> float:
        """Solve alpha'(s) = ratio for s in [0, 1].

        Relies on alpha' being non-increasing (alpha concave). Returns 1 when
        alpha'(1) >= ratio and 0 when alpha' < ratio everywhere.
        """
        if ratio <= self.derivative_one:
            return 1.0
        if self.derivative(0.0) <= ratio:
            return 0.0
        lower = np.finfo(float).tiny
        if self.derivative(lower) <= ratio:
            return lower
        return float(optimize.bisect(
            lambda s: self.derivative(s) - ratio, lower, 1.0, xtol=_S_TOL
        ))

    def solve_marginal_array(self, ratio: np.ndarray) -> np.ndarray:
        ratio = np.asarray(ratio, dtype=float)
        return np.array([self.solve_marginal(r) for r in ratio.ravel()]).reshape(ratio.shape)


@dataclass(frozen=True)
class LearningFunction(LearningLaw):
    """Power law alpha(s) = alpha0 * s**n_exp with 0 < n_exp < 1"""
    alpha0: float
    n_exp: float

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise InvalidInputException(f"alpha0 must be positive, got {self.alpha0}")
        if not 0.0 < self.n_exp < 1.0:
            raise InvalidInputException(f"n_exp must lie in (0, 1), got {self.n_exp}")

    def value(self, s):
        s = _check_unit_interval(s)
        return _unwrap(self.alpha0 * np.power(s, self.n_exp))

    def derivative(self, s):
        s = _check_unit_interval(s)
        # 0 ** (n - 1) evaluates to +inf, the alpha'(0) sentinel
        with np.errstate(divide="ignore"):
            deriv = self.alpha0 * self.n_exp * np.power(s, self.n_exp - 1.0)
        return _unwrap(deriv)

    def solve_marginal(self, ratio: float) -> float:
        if ratio <= self.derivative_one:
            return 1.0
        return float((self.alpha0 * self.n_exp / ratio) ** (1.0 / (1.0 - self.n_exp)))

    def solve_marginal_array(self, ratio: np.ndarray) -> np.ndarray:
        ratio = np.asarray(ratio, dtype=float)
        s = (self.alpha0 * self.n_exp / ratio) ** (1.0 / (1.0 - self.n_exp))
        return np.minimum(s, 1.0)


@dataclass(frozen=True)
class ConstantLearning(LearningLaw):
    """alpha(s) = alpha0 for every s; decouples the Boltzmann equation from the control"""
    alpha0: float

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise InvalidInputException(f"alpha0 must be positive, got {self.alpha0}")

    def value(self, s):
        s = _check_unit_interval(s)
        return self.alpha0 * np.ones_like(s) if s.ndim else float(self.alpha0)

    def derivative(self, s):
        s = _check_unit_interval(s)
        return np.zeros_like(s) if s.ndim else 0.0

    @property
    def is_constant(self) -> bool:
        return True

    def solve_marginal(self, ratio: float) -> float:
        return 1.0 if ratio <= 0.0 else 0.0

    def solve_marginal_array(self, ratio: np.ndarray) -> np.ndarray:
        return np.where(np.asarray(ratio, dtype=float) <= 0.0, 1.0, 0.0)


def alpha_eval(lf: LearningLaw, s: float) -> Tuple[float, float]:
    """(alpha(s), alpha'(s)) with alpha'(0) = +inf for the power law"""
    return lf.evaluate(s)
