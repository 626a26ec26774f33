"""
Time-dependent solver for the coupled Boltzmann / Hamilton-Jacobi-Bellman system

The forward equation
    d_t f - nu d_zz (z^2 f) = f(z) int_0^z alpha(S) f - alpha(S(z)) f(z) int_z^zmax f
is stepped semi-implicitly (implicit diffusion, explicit collisions) and the
backward equation
    d_t V + nu z^2 d_zz V - r V + max_s [(1 - s) z + alpha(s) B] = 0,  V(., T) = 0
implicitly in V. The outer loop alternates forward and backward sweeps,
updating the learning policy from the freshest (V, f) pair at every time level.

Also hosts the Fisher-KPP simulator used to check front speeds.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..config import DEFAULT_TOLERANCES, Tolerances
from ..core.grid import UniformGrid, conservative_tail_integrals, trapezoid
from ..core.learning import LearningLaw
from ..core.linalg import TridiagonalOperator, conservative_divergence
from ..core.profiles import (
    DensityProfile, PolicyProfile, ValueProfile, b_functional
)
from ..interfaces import InvalidInputException
from .maximizer import hamiltonian, policy_values

logger = logging.getLogger(__name__)

NEGATIVITY_TOL = 1e-12
MAX_SNAPSHOTS = 200
FRONT_MARGIN_CELLS = 10
KPP_REACTION_LIMIT = 0.25


def _default_stride(n_steps: int) -> int:
    return max(1, math.ceil(n_steps / MAX_SNAPSHOTS))


def _step_count(T: float, tau: float) -> int:
    n_steps = int(round(T / tau))
    if n_steps < 1 or not math.isclose(n_steps * tau, T, rel_tol=1e-9, abs_tol=1e-12):
        raise InvalidInputException(f"T={T} must be a positive multiple of tau={tau}")
    return n_steps


@dataclass(frozen=True)
class TdConfig:
    """Time-dependent run parameters"""
    grid: UniformGrid
    tau: float
    T: float
    nu: float
    r: float
    lf: LearningLaw
    outer_tol: float = 1e-6
    max_outer: int = 200
    omega: float = 1.0
    snapshot_every: Optional[int] = None
    tolerances: Tolerances = DEFAULT_TOLERANCES

    def __post_init__(self):
        errors = []
        if not self.tau > 0:
            errors.append(f"tau must be positive, got {self.tau}")
        if not self.T > 0:
            errors.append(f"T must be positive, got {self.T}")
        if not self.nu >= 0:
            errors.append(f"nu must be non-negative, got {self.nu}")
        if not self.r > 0:
            errors.append(f"r must be positive, got {self.r}")
        if not self.outer_tol > 0:
            errors.append(f"outer_tol must be positive, got {self.outer_tol}")
        if self.max_outer < 1:
            errors.append(f"max_outer must be at least 1, got {self.max_outer}")
        if not 0.0 < self.omega <= 1.0:
            errors.append(f"omega must lie in (0, 1], got {self.omega}")
        if self.snapshot_every is not None and self.snapshot_every < 1:
            errors.append(f"snapshot_every must be at least 1, got {self.snapshot_every}")
        if errors:
            raise InvalidInputException("; ".join(errors))
        _step_count(self.T, self.tau)

    @property
    def n_steps(self) -> int:
        return _step_count(self.T, self.tau)

    @property
    def times(self) -> np.ndarray:
        return self.tau * np.arange(self.n_steps + 1)

    @property
    def snapshot_stride(self) -> int:
        return self.snapshot_every or _default_stride(self.n_steps)


@dataclass
class TdTrace:
    """Result of run_td: snapshots of (f, V, S) and per-step series"""
    grid: UniformGrid
    times: np.ndarray
    f: np.ndarray
    V: np.ndarray
    S: np.ndarray
    step_times: np.ndarray
    production: np.ndarray
    mass: np.ndarray
    min_density: float
    converged: bool
    outer_iterations: int
    policy_changes: List[float] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def n_snapshots(self) -> int:
        return self.times.size

    def snapshot(self, index: int) -> Tuple[DensityProfile, ValueProfile, PolicyProfile]:
        return (
            DensityProfile(self.grid, self.f[index]),
            ValueProfile(self.grid, self.V[index]),
            PolicyProfile(self.grid, np.clip(self.S[index], 0.0, 1.0)),
        )

    def summary(self) -> Dict[str, Any]:
        return {
            "converged": self.converged,
            "outer_iterations": self.outer_iterations,
            "final_policy_change": self.policy_changes[-1] if self.policy_changes else None,
            "max_mass_defect": float(np.max(np.abs(self.mass - self.mass[0]))),
            "min_density": self.min_density,
            "warnings": list(self.warnings),
        }


def collision_term(f: np.ndarray, s: np.ndarray, lf: LearningLaw,
                   weights: np.ndarray) -> np.ndarray:
    """Gain minus loss of agents through meetings.

    g_i = f_i int_0^{x_i} alpha(S) f - alpha(S_i) f_i int_{x_i}^{x_max} f,
    with quadratures whose weighted sum of g vanishes exactly.
    """
    alpha = lf.value(s)
    af = alpha * f
    gained, _ = conservative_tail_integrals(af, weights)
    _, ahead = conservative_tail_integrals(f, weights)
    return f * gained - af * ahead


def geometric_diffusion(grid: UniformGrid, nu: float) -> TridiagonalOperator:
    """Operator f -> nu d_zz(z^2 f) with no-flux ends.

    Interface flux nu [z^2 f_z + 2 z f] evaluated at the right node of each
    cell, so the drift part is upwinded.
    """
    z_right = grid.nodes[1:]
    h = grid.h
    a = -nu * z_right ** 2 / h
    b = nu * z_right ** 2 / h + 2.0 * nu * z_right
    return conservative_divergence(grid.weights, a, b)


def _value_operator(grid: UniformGrid, nu: float, tau: float, r: float) -> TridiagonalOperator:
    """(1/tau + r) - nu z^2 d_zz with reflecting ghost nodes at both ends"""
    c = nu * grid.nodes ** 2 / grid.h ** 2
    lower = -c.copy()
    upper = -c.copy()
    upper[0] *= 2.0
    lower[-1] *= 2.0
    return TridiagonalOperator(lower, 1.0 / tau + r + 2.0 * c, upper)


def boltzmann_step(f_k: DensityProfile, S_k: PolicyProfile, cfg: TdConfig,
                   operator: Optional[TridiagonalOperator] = None) -> DensityProfile:
    """Advance the density one time step"""
    f_k.require_same_grid(S_k)
    grid = f_k.grid
    g = collision_term(f_k.values, S_k.values, cfg.lf, grid.weights)
    if cfg.nu == 0.0:
        return DensityProfile(grid, f_k.values + cfg.tau * g)

    if operator is None:
        operator = TridiagonalOperator.identity(grid.size, 1.0 / cfg.tau) \
            - geometric_diffusion(grid, cfg.nu)
    return DensityProfile(grid, operator.solve(f_k.values / cfg.tau + g))


def hjb_step_backward(V_next: ValueProfile, f_next: DensityProfile, S: PolicyProfile,
                      cfg: TdConfig,
                      operator: Optional[TridiagonalOperator] = None) -> ValueProfile:
    """Solve for V at the previous time level given V and f at the next one"""
    V_next.require_same_grid(f_next)
    V_next.require_same_grid(S)
    grid = V_next.grid
    B = b_functional(V_next, f_next)
    source = hamiltonian(grid.nodes, B, S.values, cfg.lf)
    if operator is None:
        operator = _value_operator(grid, cfg.nu, cfg.tau, cfg.r)
    return ValueProfile(grid, operator.solve(V_next.values / cfg.tau + source))


def _policy_row(V: np.ndarray, f: np.ndarray, grid: UniformGrid,
                lf: LearningLaw) -> np.ndarray:
    B = b_functional(ValueProfile(grid, V), DensityProfile(grid, f))
    return policy_values(grid.nodes, B, lf)


def _forward_sweep(f0: np.ndarray, S: np.ndarray, cfg: TdConfig,
                   operator: TridiagonalOperator) -> np.ndarray:
    grid = cfg.grid
    f = np.empty_like(S)
    f[0] = f0
    for k in range(cfg.n_steps):
        step = boltzmann_step(DensityProfile(grid, f[k]),
                              PolicyProfile(grid, S[k]), cfg, operator)
        f[k + 1] = step.values
    return f


def _backward_sweep(f: np.ndarray, cfg: TdConfig,
                    operator: TridiagonalOperator) -> Tuple[np.ndarray, np.ndarray]:
    grid = cfg.grid
    V = np.zeros_like(f)
    S = np.empty_like(f)
    for k in range(cfg.n_steps - 1, -1, -1):
        S[k + 1] = _policy_row(V[k + 1], f[k + 1], grid, cfg.lf)
        V[k] = hjb_step_backward(
            ValueProfile(grid, V[k + 1]), DensityProfile(grid, f[k + 1]),
            PolicyProfile(grid, S[k + 1]), cfg, operator,
        ).values
    S[0] = _policy_row(V[0], f[0], grid, cfg.lf)
    return V, S


def production_row(f: np.ndarray, s: np.ndarray, grid: UniformGrid) -> float:
    """Y = int (1 - s) z f dz"""
    return trapezoid((1.0 - s) * grid.nodes * f, grid.h)


def run_td(cfg: TdConfig, f0: DensityProfile) -> TdTrace:
    """Forward-backward iteration on [0, T] until the policy settles"""
    grid = cfg.grid
    if not f0.grid.same_as(grid):
        raise InvalidInputException(f"initial density lives on {f0.grid}, config on {grid}")
    if abs(f0.mass - 1.0) > cfg.tolerances.mass_tol:
        raise InvalidInputException(f"initial density must have unit mass, got {f0.mass:.12g}")

    n = cfg.n_steps
    logger.info(f"Starting time-dependent run: {grid}, tau={cfg.tau}, T={cfg.T}, "
                f"nu={cfg.nu}, r={cfg.r}, steps={n}")

    forward_op = TridiagonalOperator.identity(grid.size, 1.0 / cfg.tau) \
        - geometric_diffusion(grid, cfg.nu)
    backward_op = _value_operator(grid, cfg.nu, cfg.tau, cfg.r)

    # initial guess: the static policy of an agent valued at x/r
    s_guess = _policy_row(grid.nodes / cfg.r, f0.values, grid, cfg.lf)
    S = np.tile(s_guess, (n + 1, 1))

    changes: List[float] = []
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_outer + 1):
        f = _forward_sweep(f0.values, S, cfg, forward_op)
        V, S_new = _backward_sweep(f, cfg, backward_op)
        change = float(np.max(np.abs(S_new - S)))
        changes.append(change)
        S = S_new if cfg.omega == 1.0 else (1.0 - cfg.omega) * S + cfg.omega * S_new
        logger.debug(f"Outer iteration {iterations}: policy change {change:.3e}")
        if change < cfg.outer_tol:
            converged = True
            break

    # the stored density is consistent with the policy it was driven by
    if not converged or cfg.omega != 1.0:
        f = _forward_sweep(f0.values, S, cfg, forward_op)

    warnings: List[str] = []
    if not converged:
        message = f"policy did not settle after {cfg.max_outer} outer iterations " \
                  f"(last change {changes[-1]:.3e})"
        warnings.append(message)
        logger.warning(message)

    min_density = float(f.min())
    if min_density < -NEGATIVITY_TOL:
        message = f"density became negative: min {min_density:.3e}"
        warnings.append(message)
        logger.warning(message)

    masses = f @ grid.weights
    production = np.einsum("kj,kj,j->k", 1.0 - S, f, grid.nodes * grid.weights)
    stride = cfg.snapshot_stride
    idx = np.arange(0, n + 1, stride)
    if idx[-1] != n:
        idx = np.append(idx, n)

    logger.info(f"Time-dependent run finished: converged={converged}, "
                f"outer_iterations={iterations}, Y(T)={production[-1]:.6g}")
    return TdTrace(
        grid=grid,
        times=cfg.times[idx],
        f=f[idx].copy(),
        V=V[idx].copy(),
        S=S[idx].copy(),
        step_times=cfg.times,
        production=production,
        mass=masses,
        min_density=min_density,
        converged=converged,
        outer_iterations=iterations,
        policy_changes=changes,
        warnings=warnings,
    )


@dataclass(frozen=True)
class KppConfig:
    """Fisher-KPP run in the logarithmic knowledge variable"""
    nu: float
    alpha0: float
    grid: UniformGrid
    tau: float
    T: float
    snapshot_every: Optional[int] = None

    def __post_init__(self):
        errors = []
        if not self.nu >= 0:
            errors.append(f"nu must be non-negative, got {self.nu}")
        if not self.alpha0 >= 0:
            errors.append(f"alpha0 must be non-negative, got {self.alpha0}")
        if not self.tau > 0:
            errors.append(f"tau must be positive, got {self.tau}")
        elif self.tau * self.alpha0 > KPP_REACTION_LIMIT:
            errors.append(f"tau * alpha0 = {self.tau * self.alpha0:.3g} exceeds "
                          f"{KPP_REACTION_LIMIT} for the explicit reaction term")
        if not self.T > 0:
            errors.append(f"T must be positive, got {self.T}")
        if errors:
            raise InvalidInputException("; ".join(errors))
        _step_count(self.T, self.tau)

    @property
    def n_steps(self) -> int:
        return _step_count(self.T, self.tau)

    @property
    def snapshot_stride(self) -> int:
        return self.snapshot_every or _default_stride(self.n_steps)


@dataclass
class KppTrace:
    grid: UniformGrid
    times: np.ndarray
    G: np.ndarray
    warnings: List[str] = field(default_factory=list)


def _front_index(G: np.ndarray) -> int:
    below = np.flatnonzero(G < 0.5)
    return int(below[0]) if below.size else G.size - 1


def kpp_run(cfg: KppConfig, G0: np.ndarray) -> KppTrace:
    """d_t G - nu d_yy G = alpha0 G (1 - G), G = 1 on the left end, 0 on the right"""
    grid = cfg.grid
    G = np.array(G0, dtype=float)
    if G.shape != (grid.size,):
        raise InvalidInputException(f"G0 must have {grid.size} samples, got {G.shape}")
    if G.min() < 0.0 or G.max() > 1.0:
        raise InvalidInputException("G0 must lie in [0, 1]")
    if np.any(np.diff(G) > DEFAULT_TOLERANCES.num_tol):
        raise InvalidInputException("G0 must be non-increasing")
    G[0], G[-1] = 1.0, 0.0

    c = cfg.nu / grid.h ** 2
    lower = np.full(grid.size, -c)
    upper = np.full(grid.size, -c)
    diag = np.full(grid.size, 1.0 / cfg.tau + 2.0 * c)
    # Dirichlet rows
    lower[-1] = upper[0] = 0.0
    diag[0] = diag[-1] = 1.0
    operator = TridiagonalOperator(lower, diag, upper)

    stride = cfg.snapshot_stride
    times = [0.0]
    snapshots = [G.copy()]
    warnings: List[str] = []
    logger.info(f"Starting KPP run: nu={cfg.nu}, alpha0={cfg.alpha0}, {grid}, steps={cfg.n_steps}")

    for k in range(1, cfg.n_steps + 1):
        rhs = G / cfg.tau + cfg.alpha0 * G * (1.0 - G)
        rhs[0], rhs[-1] = 1.0, 0.0
        G = operator.solve(rhs) if cfg.nu > 0 else rhs * cfg.tau
        np.clip(G, 0.0, 1.0, out=G)
        G[0], G[-1] = 1.0, 0.0
        if k % stride == 0 or k == cfg.n_steps:
            times.append(k * cfg.tau)
            snapshots.append(G.copy())
            i = _front_index(G)
            if not warnings and (i < FRONT_MARGIN_CELLS or i > grid.n_cells - FRONT_MARGIN_CELLS):
                message = (f"front within {FRONT_MARGIN_CELLS} cells of the boundary "
                           f"at t={k * cfg.tau:g}")
                warnings.append(message)
                logger.warning(message)

    return KppTrace(grid=grid, times=np.array(times), G=np.array(snapshots), warnings=warnings)
