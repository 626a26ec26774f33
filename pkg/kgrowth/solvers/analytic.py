"""
Closed-form reference solutions
"""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..core.grid import UniformGrid
from ..core.profiles import CdfProfile, DensityProfile
from ..interfaces import DomainException, InvalidInputException


@dataclass(frozen=True)
class ParetoParams:
    """Tail 1 - Phi(x) ~ k x^(-1/theta)"""
    k: float
    theta: float

    def __post_init__(self):
        if not self.k > 0:
            raise InvalidInputException(f"k must be positive, got {self.k}")
        if not 0.0 < self.theta < 1.0:
            raise InvalidInputException(f"theta must lie in (0, 1), got {self.theta}")


def _check_alpha0(alpha0: float) -> None:
    if not alpha0 > 0:
        raise InvalidInputException(f"alpha0 must be positive, got {alpha0}")


def pareto_cdf(x, p: ParetoParams) -> np.ndarray:
    """Phi(x) = 1 / (1 + k x^(-1/theta)), continuous at x = 0"""
    x = np.asarray(x, dtype=float)
    u = np.power(np.maximum(x, 0.0), 1.0 / p.theta)
    return u / (u + p.k)


def constant_alpha_bgp(alpha0: float, p: ParetoParams,
                       grid: UniformGrid) -> Tuple[float, CdfProfile]:
    """Growth rate and distribution of the balanced growth path for constant alpha"""
    _check_alpha0(alpha0)
    phi = pareto_cdf(grid.nodes, p)
    phi[0] = 0.0
    return alpha0 * p.theta, CdfProfile(grid, phi)


def constant_alpha_density(alpha0: float, p: ParetoParams, grid: UniformGrid) -> DensityProfile:
    """phi = Phi' of the constant-alpha distribution"""
    _check_alpha0(alpha0)
    x = grid.nodes
    u = np.power(x, 1.0 / p.theta)
    values = (p.k / p.theta) * np.power(x, 1.0 / p.theta - 1.0) / (u + p.k) ** 2
    return DensityProfile(grid, values)


def logistic_cdf(F0, alpha0: float, t: float):
    """Solution of dF/dt = -alpha0 F (1 - F) started from F0"""
    F0 = np.asarray(F0, dtype=float)
    if np.any(F0 < 0.0) or np.any(F0 > 1.0):
        raise DomainException("F0 must lie in [0, 1]")
    if t < 0:
        raise DomainException(f"time must be non-negative, got {t}")
    decay = math.exp(-alpha0 * t)
    out = F0 * decay / (1.0 - F0 + F0 * decay)
    return float(out) if out.ndim == 0 else out


def kpp_wave_speed(nu: float, alpha0: float) -> float:
    """Minimal travelling-wave speed 2 sqrt(nu alpha0)"""
    if nu < 0:
        raise DomainException(f"nu must be non-negative, got {nu}")
    _check_alpha0(alpha0)
    return 2.0 * math.sqrt(nu * alpha0)
