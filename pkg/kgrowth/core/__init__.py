"""
Core building blocks: grids, quadrature, learning laws, profiles, linear algebra
"""

from .grid import (
    UniformGrid, trapezoid, cumulative_trapezoid, tail_trapezoid, conservative_tail_integrals
)
from .learning import LearningLaw, LearningFunction, ConstantLearning, alpha_eval
from .profiles import (
    Profile, DensityProfile, CdfProfile, ValueProfile, PolicyProfile,
    mass, cdf_from_density, b_functional, truncated_gaussian_density
)
from .linalg import TridiagonalOperator, conservative_divergence, solve_bordered

__all__ = [
    "UniformGrid", "trapezoid", "cumulative_trapezoid", "tail_trapezoid",
    "conservative_tail_integrals",
    "LearningLaw", "LearningFunction", "ConstantLearning", "alpha_eval",
    "Profile", "DensityProfile", "CdfProfile", "ValueProfile", "PolicyProfile",
    "mass", "cdf_from_density", "b_functional", "truncated_gaussian_density",
    "TridiagonalOperator", "conservative_divergence", "solve_bordered",
]
