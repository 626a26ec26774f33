"""
Pointwise optimal learning time

Maximizes (1 - s) x + alpha(s) B over s in [0, 1] and locates the threshold
x0 below which agents learn full time.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from ..core.grid import UniformGrid
from ..core.learning import LearningLaw
from ..core.profiles import PolicyProfile
from ..interfaces import ControlTag, DomainException, InvalidInputException

logger = logging.getLogger(__name__)

_X0_TOL = 1e-12


@dataclass(frozen=True)
class ControlCase:
    """Maximizer of the pointwise objective together with the branch that produced it"""
    tag: ControlTag
    s_value: float

    def __post_init__(self):
        if not 0.0 <= self.s_value <= 1.0:
            raise InvalidInputException(f"control must lie in [0, 1], got {self.s_value}")


@dataclass(frozen=True)
class ThresholdPoint:
    """Point x0 where B(x0) alpha'(1) = x0; S = 1 on [0, x0)"""
    x0: float
    bracketed: bool = True  # False when g > 0 up to the grid end and x0 is clamped to x_max
    resolved: bool = True  # False when the root lies inside the first cell

    def __float__(self) -> float:
        return self.x0


def hamiltonian(x, B, s, lf: LearningLaw):
    """Objective (1 - s) x + alpha(s) B"""
    return (1.0 - s) * x + lf.value(s) * B


def optimal_control(x: float, B: float, lf: LearningLaw) -> ControlCase:
    if x < 0:
        raise DomainException(f"knowledge level must be non-negative, got {x}")
    if not np.isfinite(B):
        raise InvalidInputException(f"B must be finite, got {B}")

    if B <= 0.0:
        return ControlCase(ControlTag.ZERO_B, 0.0)
    if x == 0.0 or B * lf.derivative_one >= x:
        return ControlCase(ControlTag.SATURATED, 1.0)

    s = lf.solve_marginal(x / B)
    if s <= 0.0:
        return ControlCase(ControlTag.NO_GAIN, 0.0)
    if s >= 1.0:
        return ControlCase(ControlTag.SATURATED, 1.0)
    return ControlCase(ControlTag.INTERIOR, s)


def policy_values(x: np.ndarray, B: np.ndarray, lf: LearningLaw) -> np.ndarray:
    """Vectorised optimal_control returning only the s values"""
    x = np.asarray(x, dtype=float)
    B = np.asarray(B, dtype=float)
    s = np.zeros_like(x)

    positive = B > 0.0
    saturated = positive & ((x == 0.0) | (B * lf.derivative_one >= x))
    interior = positive & ~saturated
    s[saturated] = 1.0
    if np.any(interior):
        s[interior] = lf.solve_marginal_array(x[interior] / B[interior])
    return np.clip(s, 0.0, 1.0)


def policy_from_b(B: np.ndarray, grid: UniformGrid, lf: LearningLaw) -> PolicyProfile:
    B = np.asarray(B, dtype=float)
    if B.shape != (grid.size,):
        raise InvalidInputException(f"B must have {grid.size} samples, got {B.shape}")
    return PolicyProfile(grid, policy_values(grid.nodes, B, lf))


def find_x0(B: np.ndarray, grid: UniformGrid, lf: LearningLaw) -> ThresholdPoint:
    """First root of g(x) = B(x) alpha'(1) - x from the left.

    B is linearly interpolated between nodes and the bracketing cell is
    refined by bisection. Returns x0 = 0 when g(0) <= 0.
    """
    B = np.asarray(B, dtype=float)
    x = grid.nodes
    g = B * lf.derivative_one - x
    if g[0] <= 0.0:
        return ThresholdPoint(float(x[0]))

    crossing = np.flatnonzero(g <= 0.0)
    if crossing.size == 0:
        logger.warning(f"g stays positive up to x_max={grid.x_max}; threshold clamped")
        return ThresholdPoint(float(x[-1]), bracketed=False)

    i = int(crossing[0])
    if g[i] == 0.0:
        return ThresholdPoint(float(x[i]))

    x_lo, x_hi = x[i - 1], x[i]
    b_lo, b_hi = B[i - 1], B[i]

    def g_cell(xi: float) -> float:
        b = b_lo + (b_hi - b_lo) * (xi - x_lo) / (x_hi - x_lo)
        return b * lf.derivative_one - xi

    root = float(optimize.bisect(g_cell, x_lo, x_hi, xtol=_X0_TOL))
    return ThresholdPoint(root, resolved=i > 1)
