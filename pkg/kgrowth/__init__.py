"""
kgrowth - mean-field models of knowledge growth through random meetings
"""

__version__ = "0.1.0"

from .config import Tolerances, DEFAULT_TOLERANCES
from .interfaces import (
    ControlTag, RunMode, InvariantReport, KnowledgeGrowthException, InvalidInputException,
    DomainException, GridMismatchException, SolverException, IntegrationException,
    ExtrapolationException, ConfigValidationException
)
from .core import UniformGrid, LearningFunction, ConstantLearning
from .solvers import run_td, run_bgp, kpp_run, solve_k, gamma_from_k, TdConfig, BgpConfig

__all__ = [
    "__version__", "Tolerances", "DEFAULT_TOLERANCES",
    "ControlTag", "RunMode", "InvariantReport", "KnowledgeGrowthException",
    "InvalidInputException", "DomainException", "GridMismatchException", "SolverException",
    "IntegrationException", "ExtrapolationException", "ConfigValidationException",
    "UniformGrid", "LearningFunction", "ConstantLearning",
    "run_td", "run_bgp", "kpp_run", "solve_k", "gamma_from_k", "TdConfig", "BgpConfig",
]
