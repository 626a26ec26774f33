"""
Solvers: pointwise maximizer, closed forms, time-dependent and growth-path iterations,
and the tail transform
"""

from .maximizer import (
    ControlCase, ThresholdPoint, optimal_control, policy_from_b, policy_values, find_x0,
    hamiltonian
)
from .analytic import (
    ParetoParams, constant_alpha_bgp, constant_alpha_density, logistic_cdf, kpp_wave_speed,
    pareto_cdf
)
from .td_solver import (
    TdConfig, TdTrace, KppConfig, KppTrace, boltzmann_step, hjb_step_backward, run_td, kpp_run,
    collision_term, geometric_diffusion
)
from .bgp_solver import (
    BgpConfig, BgpSolution, bgp_phi_step, bgp_v_step, policy_gamma_update, run_bgp,
    rescale_to_time, bgp_production
)
from .ktransform import (
    KProfile, solve_k, gamma_from_k, phi_from_k, policy_to_ktilde, check_k_bounds
)

__all__ = [
    "ControlCase", "ThresholdPoint", "optimal_control", "policy_from_b", "policy_values",
    "find_x0", "hamiltonian",
    "ParetoParams", "constant_alpha_bgp", "constant_alpha_density", "logistic_cdf",
    "kpp_wave_speed", "pareto_cdf",
    "TdConfig", "TdTrace", "KppConfig", "KppTrace", "boltzmann_step", "hjb_step_backward",
    "run_td", "kpp_run", "collision_term", "geometric_diffusion",
    "BgpConfig", "BgpSolution", "bgp_phi_step", "bgp_v_step", "policy_gamma_update",
    "run_bgp", "rescale_to_time", "bgp_production",
    "KProfile", "solve_k", "gamma_from_k", "phi_from_k", "policy_to_ktilde", "check_k_bounds",
]
