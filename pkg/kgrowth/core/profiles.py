"""
Grid-aligned profiles: densities, distribution functions, value functions
and learning policies, plus the B-functional coupling them
"""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..config import DEFAULT_TOLERANCES, Tolerances
from ..interfaces import GridMismatchException, InvalidInputException
from .grid import UniformGrid, cumulative_trapezoid, tail_trapezoid, trapezoid


@dataclass(frozen=True, eq=False)
class Profile:
    """Sample vector attached to a grid, one value per node"""
    grid: UniformGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size != self.grid.size:
            raise InvalidInputException(
                f"{type(self).__name__} needs {self.grid.size} samples, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidInputException(f"{type(self).__name__} has non-finite samples")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    def __len__(self) -> int:
        return self.values.size

    def require_same_grid(self, other: "Profile") -> None:
        if not self.grid.same_as(other.grid):
            raise GridMismatchException(
                f"{type(self).__name__} on {self.grid} vs {type(other).__name__} on {other.grid}"
            )

    def check_invariants(self, tolerances: Tolerances = DEFAULT_TOLERANCES) -> List[str]:
        return []


@dataclass(frozen=True, eq=False)
class DensityProfile(Profile):
    """Agent density f or phi (per unit knowledge)"""

    @property
    def mass(self) -> float:
        return trapezoid(self.values, self.grid.h)

    def normalized(self) -> "DensityProfile":
        total = self.mass
        if total <= 0:
            raise InvalidInputException("cannot normalise a density with non-positive mass")
        return DensityProfile(self.grid, self.values / total)

    def check_invariants(self, tolerances: Tolerances = DEFAULT_TOLERANCES,
                         normalized: bool = True) -> List[str]:
        problems = []
        lowest = float(self.values.min())
        if lowest < -tolerances.num_tol:
            problems.append(f"negative density {lowest:.3e}")
        if normalized and abs(self.mass - 1.0) > tolerances.mass_tol:
            problems.append(f"mass {self.mass:.12g} differs from 1")
        return problems


@dataclass(frozen=True, eq=False)
class CdfProfile(Profile):
    """Cumulative distribution Phi"""

    def check_invariants(self, tolerances: Tolerances = DEFAULT_TOLERANCES) -> List[str]:
        problems = []
        tol = tolerances.num_tol
        if abs(self.values[0]) > tol:
            problems.append(f"Phi(x_min) = {self.values[0]:.3e}, expected 0")
        if np.any(np.diff(self.values) < -tol):
            problems.append("Phi is decreasing somewhere")
        if self.values.min() < -tol or self.values.max() > 1.0 + tol:
            problems.append("Phi leaves [0, 1]")
        return problems


@dataclass(frozen=True, eq=False)
class ValueProfile(Profile):
    """Value function V or v"""

    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / self.grid.h

    def check_invariants(self, tolerances: Tolerances = DEFAULT_TOLERANCES,
                         r: Optional[float] = None) -> List[str]:
        problems = []
        slopes = self.slopes()
        if slopes.min() < -tolerances.num_tol:
            problems.append(f"v decreasing, min slope {slopes.min():.3e}")
        if r is not None and slopes.max() > 1.0 / r + tolerances.num_tol:
            problems.append(f"v slope {slopes.max():.6g} exceeds 1/r = {1.0 / r:.6g}")
        return problems


@dataclass(frozen=True, eq=False)
class PolicyProfile(Profile):
    """Fraction of time spent learning, S(x) in [0, 1]"""

    def __post_init__(self):
        super().__post_init__()
        if self.values.min() < 0.0 or self.values.max() > 1.0:
            raise InvalidInputException("policy values must lie in [0, 1]")

    @classmethod
    def constant(cls, grid: UniformGrid, s: float) -> "PolicyProfile":
        return cls(grid, np.full(grid.size, float(s)))

    def check_invariants(self, tolerances: Tolerances = DEFAULT_TOLERANCES,
                         monotone: bool = True) -> List[str]:
        if monotone and np.any(np.diff(self.values) > tolerances.num_tol):
            return ["policy increases somewhere"]
        return []


def mass(profile: DensityProfile) -> float:
    return profile.mass


def cdf_from_density(f: DensityProfile) -> CdfProfile:
    """Phi_i = trapezoid integral of f over [x_0, x_i]"""
    return CdfProfile(f.grid, cumulative_trapezoid(f.values, f.grid.h))


def b_functional(v: ValueProfile, phi: DensityProfile) -> np.ndarray:
    """B(x_i) = integral over [x_i, x_max] of (v(y) - v(x_i)) phi(y) dy.

    The upper limit is cut at the grid end, so B(x_max) = 0 and the result
    misses the density mass beyond x_max.
    """
    v.require_same_grid(phi)
    h = v.grid.h
    weighted = tail_trapezoid(v.values * phi.values, h)
    tail_mass = tail_trapezoid(phi.values, h)
    out = weighted - v.values * tail_mass
    out[-1] = 0.0
    return out


def truncated_gaussian_density(grid: UniformGrid, mean: float = 5.0, std: float = 1.0,
                               zero_origin: bool = False) -> DensityProfile:
    """Gaussian restricted to the grid and renormalised to unit trapezoid mass"""
    if std <= 0:
        raise InvalidInputException(f"std must be positive, got {std}")
    values = np.exp(-0.5 * ((grid.nodes - mean) / std) ** 2)
    if zero_origin:
        values[0] = 0.0
    return DensityProfile(grid, values).normalized()
