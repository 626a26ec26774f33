"""
Balanced growth path solver

Looks for (phi, v, S, gamma) with f(z, t) = exp(-gamma t) phi(z exp(-gamma t)):

    -(gamma x phi)' - nu (x^2 phi)''
        = phi(x) int_0^x alpha(S) phi - alpha(S(x)) phi(x) int_x^inf phi
    (r - gamma) v + gamma x v' - nu x^2 v'' = max_s [(1 - s) x + alpha(s) B(x)]
    S = argmax,   gamma = 2 sqrt(nu int alpha(S) phi)   (nu > 0)
                  gamma = theta int alpha(S) phi          (nu = 0)

Each iteration solves the density equation under the unit-mass constraint,
then the value equation, then updates the policy and growth rate; all four
unknowns are blended with the previous iterate using the weight omega.

Without diffusion the density equation integrates once to
gamma x Phi' = A (1 - Phi) with A(x) = int_0^x alpha(S) dPhi. That family of
solutions is invariant under x -> c x, so the step marches the cumulative
form in log x and pins the scale by holding the median of the density fixed.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import integrate, optimize

from ..config import DEFAULT_TOLERANCES, Tolerances
from ..core.grid import UniformGrid, cumulative_trapezoid, tail_trapezoid, trapezoid
from ..core.learning import LearningLaw
from ..core.linalg import TridiagonalOperator, conservative_divergence, solve_bordered
from ..core.profiles import (
    CdfProfile, DensityProfile, PolicyProfile, ValueProfile, b_functional, cdf_from_density,
    truncated_gaussian_density
)
from ..interfaces import (
    InvalidInputException, InvariantReport, KnowledgeGrowthException, SolverException
)
from .maximizer import ThresholdPoint, find_x0, hamiltonian, policy_from_b
from .td_solver import collision_term

logger = logging.getLogger(__name__)

GAMMA_FLOOR = 1e-8
COLLAPSE_ITERATIONS = 10
ORIGIN_FRACTION = 0.05
ORIGIN_MASS_LIMIT = 0.9
RESIDUAL_FACTOR = 10.0

MARCH_RTOL = 1e-10
MARCH_ATOL = 1e-12
SEED_XTOL = 1e-13
SEED_MISS_TOL = 1e-10
SEED_SECANT_STEPS = 20
SEED_BRACKET_TRIES = 60


@dataclass(frozen=True)
class BgpConfig:
    """Balanced-growth-path iteration parameters"""
    grid: UniformGrid
    nu: float
    r: float
    lf: LearningLaw
    theta: Optional[float] = None
    omega: float = 0.75
    inner_tol: float = 1e-10
    tol: float = 1e-8
    max_iters: int = 5000
    eps_hjb: float = 0.0
    tolerances: Tolerances = DEFAULT_TOLERANCES

    def __post_init__(self):
        errors = []
        if not self.nu >= 0:
            errors.append(f"nu must be non-negative, got {self.nu}")
        if not self.r > 0:
            errors.append(f"r must be positive, got {self.r}")
        if self.nu == 0:
            if self.theta is None or not 0.0 < self.theta < 1.0:
                errors.append(f"theta in (0, 1) is required when nu = 0, got {self.theta}")
        elif self.theta is not None:
            errors.append("theta is not used when nu > 0; the growth rate follows from nu")
        if not 0.0 < self.omega <= 1.0:
            errors.append(f"omega must lie in (0, 1], got {self.omega}")
        if not self.inner_tol > 0 or not self.tol > 0:
            errors.append("tolerances must be positive")
        if self.max_iters < 1:
            errors.append(f"max_iters must be at least 1, got {self.max_iters}")
        if not self.eps_hjb >= 0:
            errors.append(f"eps_hjb must be non-negative, got {self.eps_hjb}")
        if errors:
            raise InvalidInputException("; ".join(errors))

    def initial_gamma(self) -> float:
        if self.nu == 0:
            return 0.5 * self.theta * self.lf.alpha_one
        return float(np.sqrt(self.nu * self.lf.alpha_one))


@dataclass
class BgpSolution:
    """Converged (or last) iterate of run_bgp"""
    phi: DensityProfile
    v: ValueProfile
    S: PolicyProfile
    gamma: float
    x0: ThresholdPoint
    residuals: Dict[str, float]
    converged: bool
    iterations: int
    degenerate: bool = False
    history: List[Dict[str, float]] = field(default_factory=list)
    Phi: Optional[CdfProfile] = None

    @property
    def grid(self) -> UniformGrid:
        return self.phi.grid

    @property
    def cdf(self) -> CdfProfile:
        """Marched cdf without diffusion, trapezoid cdf of phi otherwise"""
        return self.Phi if self.Phi is not None else cdf_from_density(self.phi)

    def invariant_report(self, cfg: BgpConfig,
                         tolerances: Optional[Tolerances] = None) -> InvariantReport:
        tol = tolerances or cfg.tolerances
        x = self.grid.nodes
        report = InvariantReport("bgp_solution")

        defect = abs(self.phi.mass - 1.0)
        report.add("mass", defect <= tol.mass_tol, defect)
        report.add("phi_origin_zero", self.phi.values[0] == 0.0, float(self.phi.values[0]))
        report.add("gamma_positive", self.gamma > 0.0, self.gamma)

        rise = float(np.max(np.diff(self.S.values), initial=0.0))
        report.add("policy_non_increasing", rise <= tol.num_tol, rise)

        slopes = self.v.slopes()
        report.add("value_non_decreasing", slopes.min() >= -tol.num_tol, float(slopes.min()))
        report.add("value_slope_bound", slopes.max() <= 1.0 / cfg.r + tol.num_tol,
                   float(slopes.max()), f"1/r = {1.0 / cfg.r:.6g}")

        # the flat stretch and the x/r comparison are properties of the
        # diffusion-free problem; with nu > 0 the reflecting top end bends v down
        if cfg.nu == 0:
            below = x <= self.x0.x0
            if below.sum() >= 2:
                stretch = self.v.values[below]
                spread = float(stretch.max() - stretch.min())
                scale = max(abs(float(stretch.max())), np.finfo(float).tiny)
                report.add("value_flat_below_x0", spread <= 1e-6 * scale, spread / scale)
            gap = float(np.min(self.v.values - x / cfg.r))
            if self.gamma < cfg.r:
                report.add("value_above_x_over_r", gap >= -1e-6, gap)
            else:
                excess = float(np.max(self.v.values - x / cfg.r))
                report.add("value_below_x_over_r", excess <= 1e-6, excess)
            ratio = self.gamma / cfg.theta
            report.add("gamma_over_theta_bound", ratio <= cfg.lf.alpha_one + 1e-8, ratio)

        consistency = self.residuals.get("gamma", np.inf)
        report.add("gamma_consistency", consistency <= 1e-4, consistency)

        limit = RESIDUAL_FACTOR * cfg.tol
        for name, key in (("density_residual", "boltzmann"), ("value_residual", "hjb"),
                          ("origin_leak", "origin_leak")):
            value = self.residuals.get(key, np.inf)
            report.add(name, value <= limit, value, f"limit {limit:.1e}")
        return report

    def to_dict(self) -> Dict[str, Any]:
        return {
            "gamma": self.gamma,
            "x0": self.x0.x0,
            "x0_bracketed": self.x0.bracketed,
            "x0_resolved": self.x0.resolved,
            "converged": self.converged,
            "iterations": self.iterations,
            "degenerate": self.degenerate,
            "residuals": dict(self.residuals),
            "production": bgp_production(self),
        }


def _density_operator(grid: UniformGrid, gamma: float, nu: float) -> TridiagonalOperator:
    """-d_x [gamma x phi + nu d_x(x^2 phi)] in flux form, fluxes upwinded to the right node.

    phi_0 is pinned to zero, so nothing crosses the first face; the weighted
    row sum over the free nodes then vanishes for every phi.
    """
    x_right = grid.nodes[1:]
    h = grid.h
    a = -nu * x_right ** 2 / h
    b = gamma * x_right + nu * x_right ** 2 / h + 2.0 * nu * x_right
    a[0] = b[0] = 0.0
    return conservative_divergence(grid.weights, a, b).scaled(-1.0)


def _value_operator(grid: UniformGrid, gamma: float, nu: float, r: float,
                    eps: float) -> TridiagonalOperator:
    x = grid.nodes
    h = grid.h
    adv = gamma * (x + eps) / h
    dif = nu * x ** 2 / h ** 2
    lower = -adv - dif
    upper = -dif.copy()
    # reflecting ghost nodes: v_{-1} = v_1 and v_{N+1} = v_{N-1}
    upper[0] = -adv[0] - 2.0 * dif[0]
    lower[-1] = -adv[-1] - 2.0 * dif[-1]
    return TridiagonalOperator(lower, (r - gamma) + adv + 2.0 * dif, upper)


def density_median(phi: DensityProfile) -> float:
    """Median of the trapezoid cdf, linear inside the crossing cell"""
    Phi = cumulative_trapezoid(phi.values, phi.grid.h)
    if not Phi[-1] > 0:
        raise InvalidInputException("density has no mass, median undefined")
    half = 0.5 * Phi[-1]
    i = int(np.searchsorted(Phi, half))
    x = phi.grid.nodes
    return float(x[i - 1] + (half - Phi[i - 1]) / (Phi[i] - Phi[i - 1]) * phi.grid.h)


def _march_log_cdf(grid: UniformGrid, alpha: np.ndarray, gamma: float,
                   u_start: float) -> Tuple[np.ndarray, np.ndarray]:
    """u = log Phi and a = A / Phi at nodes 1..N, started from Phi(x_1) = exp(u_start).

    In xi = log x the cumulative equation reads
        u' = a (1 - e^u) / gamma,   a' = (alpha(S) - a) u'
    with a(x_1) = alpha(S(0)) since A ~ alpha(S(0)) Phi near the origin.
    """
    nodes = grid.nodes
    xi = np.log(nodes[1:])

    def rhs(t: float, y: np.ndarray) -> List[float]:
        u, a = y
        rate = -a * np.expm1(u) / gamma
        return [rate, (np.interp(np.exp(t), nodes, alpha) - a) * rate]

    sol = integrate.solve_ivp(rhs, (xi[0], xi[-1]), [u_start, alpha[0]], method="DOP853",
                              t_eval=xi, rtol=MARCH_RTOL, atol=MARCH_ATOL)
    if not sol.success:
        raise SolverException(f"cumulative density march failed: {sol.message}",
                              {"gamma": gamma, "u_start": u_start})
    return sol.y[0], sol.y[1]


def _log_median(u: np.ndarray, a: np.ndarray, xi: np.ndarray, gamma: float) -> float:
    """log of the median of Phi / Phi(x_N); below x_1 u is continued linearly"""
    target = u[-1] + np.log(0.5)
    if target >= u[0]:
        return float(np.interp(target, u, xi))
    slope = -a[0] * np.expm1(u[0]) / gamma
    return float(xi[0] - (u[0] - target) / slope)


def _seed_guess(phi_prev: DensityProfile, alpha0: float, gamma: float,
                log_median: float) -> float:
    """log Phi(x_1) read off phi_prev(x_1) = alpha0 Phi (1 - Phi) / (gamma x_1)"""
    x1 = phi_prev.grid.nodes[1]
    c = gamma * x1 * phi_prev.values[1] / alpha0
    if 0.0 < c < 0.25:
        return float(np.log(0.5 * (1.0 - np.sqrt(1.0 - 4.0 * c))))
    # pure power law Phi = (x / m)^p / 2 below the median
    return float(np.log(0.5) + alpha0 / gamma * (np.log(x1) - log_median))


def _pinned_march(grid: UniformGrid, alpha: np.ndarray, gamma: float, log_median: float,
                  guess: float) -> Tuple[np.ndarray, np.ndarray]:
    """March whose normalised cdf has the requested median"""
    xi = np.log(grid.nodes[1:])
    marches: Dict[float, Tuple[np.ndarray, np.ndarray]] = {}

    def miss(u_start: float) -> float:
        if not u_start < 0.0:
            return float("nan")
        if u_start not in marches:
            marches[u_start] = _march_log_cdf(grid, alpha, gamma, u_start)
        u, a = marches[u_start]
        return _log_median(u, a, xi, gamma) - log_median

    # d log(median) / d seed is close to -gamma / alpha(S(0))
    slope = gamma / alpha[0]
    lo = min(guess, -SEED_XTOL)
    f_lo = miss(lo)
    if f_lo == 0.0:
        return marches[lo]
    try:
        seed = float(optimize.newton(miss, lo, x1=min(lo + f_lo / slope, 0.5 * lo),
                                     tol=SEED_XTOL, maxiter=SEED_SECANT_STEPS))
    except (RuntimeError, OverflowError):
        seed = float("nan")
    if np.isfinite(seed) and abs(miss(seed)) <= SEED_MISS_TOL:
        return marches[seed]

    logger.debug(f"Secant seed search failed near {lo:.6g}; bracketing")
    direction = 1.0 if f_lo > 0 else -1.0
    step = max(2.0 * abs(f_lo) / slope, 1e-6)
    for _ in range(SEED_BRACKET_TRIES):
        hi = lo + direction * step
        if hi >= 0.0:
            hi = 0.5 * lo
        f_hi = miss(hi)
        if np.sign(f_hi) != np.sign(f_lo):
            seed = float(optimize.brentq(miss, min(lo, hi), max(lo, hi), xtol=SEED_XTOL))
            miss(seed)
            return marches[seed]
        lo, f_lo = hi, f_hi
        step *= 4.0
    raise SolverException("no seed reproduces the density median",
                          {"gamma": gamma, "log_median": log_median, "last_seed": lo})


def no_diffusion_profiles(phi_prev: DensityProfile, S_prev: PolicyProfile, gamma_prev: float,
                          cfg: BgpConfig,
                          median: Optional[float] = None) -> Tuple[DensityProfile, CdfProfile]:
    """Density and cdf of the diffusion-free step, scale pinned by the median"""
    grid = phi_prev.grid
    alpha = np.asarray(cfg.lf.value(S_prev.values), dtype=float)
    if not alpha[0] > 0:
        raise SolverException(f"no learning at the origin (alpha = {alpha[0]:.3e}); "
                              "the cumulative density cannot grow", {"gamma": gamma_prev})
    target = density_median(phi_prev) if median is None else median
    log_median = float(np.log(target))

    guess = _seed_guess(phi_prev, alpha[0], gamma_prev, log_median)
    u, a = _pinned_march(grid, alpha, gamma_prev, log_median, guess)

    Phi = np.exp(u)
    values = np.concatenate(([0.0], a * Phi * (-np.expm1(u)) / (gamma_prev * grid.nodes[1:])))
    cdf = np.concatenate(([0.0], Phi / Phi[-1]))
    logger.debug(f"Cumulative density step: gamma={gamma_prev:.6g}, seed={u[0]:.6g}, "
                 f"tail beyond x_max={-np.expm1(u[-1]):.3e}")
    return DensityProfile(grid, values).normalized(), CdfProfile(grid, cdf)


def bgp_phi_step(phi_prev: DensityProfile, S_prev: PolicyProfile, gamma_prev: float,
                 cfg: BgpConfig, median: Optional[float] = None) -> DensityProfile:
    """Density update under phi_0 = 0 and unit trapezoid mass.

    With nu > 0 this is the bordered linear solve; without diffusion the
    cumulative form is marched instead and `median` (default: that of
    phi_prev) fixes the scale.
    """
    phi_prev.require_same_grid(S_prev)
    grid = phi_prev.grid
    if cfg.nu == 0:
        if not gamma_prev > 0:
            raise SolverException(
                f"density step needs gamma > 0 without diffusion, got {gamma_prev}",
                {"gamma": gamma_prev})
        return no_diffusion_profiles(phi_prev, S_prev, gamma_prev, cfg, median)[0]

    q1 = collision_term(phi_prev.values, S_prev.values, cfg.lf, grid.weights)
    matrix = _density_operator(grid, gamma_prev, cfg.nu).to_sparse()[1:, 1:]
    dump = {
        "gamma": gamma_prev,
        "phi": phi_prev.values.tolist(),
        "S": S_prev.values.tolist(),
    }
    interior, multiplier = solve_bordered(
        matrix, phi_prev.values[1:], grid.weights[1:], q1[1:], 1.0, dump
    )

    residual = float(np.max(np.abs(matrix @ interior - multiplier * phi_prev.values[1:] - q1[1:])))
    scale = (abs(matrix).sum(axis=1).max() * np.max(np.abs(interior))
             + abs(multiplier) * np.max(phi_prev.values) + np.max(np.abs(q1)))
    if residual > cfg.inner_tol * max(float(scale), 1.0):
        raise SolverException(f"density solve residual {residual:.3e} too large", dump)

    logger.debug(f"Density step: gamma={gamma_prev:.6g}, multiplier={multiplier:.3e}")
    return DensityProfile(grid, np.concatenate(([0.0], interior)))


def bgp_v_step(phi_new: DensityProfile, v_prev: ValueProfile, S_prev: PolicyProfile,
               gamma_prev: float, cfg: BgpConfig) -> ValueProfile:
    """Value update with the Hamiltonian frozen at the previous policy.

    B(x) = int_x (v(y) - v(x)) phi(y) dy splits into a forward integral of v,
    taken from v_prev, and -v(x) times the tail mass, kept implicit on the
    diagonal. The fixed point is unchanged.
    """
    phi_new.require_same_grid(v_prev)
    phi_new.require_same_grid(S_prev)
    grid = phi_new.grid
    if cfg.r - gamma_prev <= 0:
        logger.warning(f"r - gamma = {cfg.r - gamma_prev:.3e} <= 0: value equation is ill-posed")

    alpha = cfg.lf.value(S_prev.values)
    ahead = tail_trapezoid(v_prev.values * phi_new.values, grid.h)
    tail_mass = tail_trapezoid(phi_new.values, grid.h)
    ahead[-1] = tail_mass[-1] = 0.0
    q2 = (1.0 - S_prev.values) * grid.nodes + alpha * ahead

    operator = _value_operator(grid, gamma_prev, cfg.nu, cfg.r, cfg.eps_hjb)
    return ValueProfile(grid, operator.shifted(alpha * tail_mass).solve(q2))


def _gamma_from_policy(phi: DensityProfile, S: PolicyProfile, cfg: BgpConfig) -> float:
    meetings = trapezoid(cfg.lf.value(S.values) * phi.values, phi.grid.h)
    if meetings < -cfg.tolerances.num_tol:
        raise KnowledgeGrowthException(f"meeting rate integral is negative: {meetings:.3e}")
    meetings = max(meetings, 0.0)
    if cfg.nu > 0:
        return float(2.0 * np.sqrt(cfg.nu * meetings))
    return float(cfg.theta * meetings)


def policy_gamma_update(phi_new: DensityProfile, v_new: ValueProfile,
                        cfg: BgpConfig) -> Tuple[PolicyProfile, float]:
    B = b_functional(v_new, phi_new)
    S = policy_from_b(B, phi_new.grid, cfg.lf)
    return S, _gamma_from_policy(phi_new, S, cfg)


def _relative_change(new: np.ndarray, old: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(new))), np.finfo(float).tiny)
    return float(np.max(np.abs(new - old))) / scale


def _origin_mass(phi: DensityProfile) -> float:
    grid = phi.grid
    cut = max(1, int(np.floor(ORIGIN_FRACTION * grid.n_cells)))
    return trapezoid(phi.values[:cut + 1], grid.h)


def _row_scale(operator: TridiagonalOperator, u: np.ndarray, rhs: np.ndarray) -> float:
    row_sum = np.abs(operator.lower) + np.abs(operator.diag) + np.abs(operator.upper)
    scale = float(row_sum.max() * np.max(np.abs(u)) + np.max(np.abs(rhs)))
    return max(scale, np.finfo(float).tiny)


def _residuals(phi: DensityProfile, v: ValueProfile, S: PolicyProfile, gamma: float,
               cfg: BgpConfig, median: Optional[float] = None) -> Dict[str, float]:
    """Scaled equation residuals of the iterate, plus the mass flux through the origin"""
    grid = phi.grid

    if cfg.nu > 0:
        q1 = collision_term(phi.values, S.values, cfg.lf, grid.weights)
        operator = _density_operator(grid, gamma, cfg.nu)
        density_rows = (operator.matvec(phi.values) - q1)[1:]
        scale = _row_scale(operator, phi.values, q1)
        boltzmann = float(np.max(np.abs(density_rows))) / scale
        # what a mass multiplier would have to absorb
        leak = abs(float(grid.weights[1:] @ density_rows)) / scale
    else:
        marched, _ = no_diffusion_profiles(phi, S, gamma, cfg, median)
        boltzmann = _relative_change(marched.values, phi.values)
        leak = 0.0

    B = b_functional(v, phi)
    q2 = hamiltonian(grid.nodes, B, S.values, cfg.lf)
    operator = _value_operator(grid, gamma, cfg.nu, cfg.r, cfg.eps_hjb)
    value_rows = operator.matvec(v.values) - q2
    hjb = float(np.max(np.abs(value_rows))) / _row_scale(operator, v.values, q2)

    return {
        "boltzmann": boltzmann,
        "hjb": hjb,
        "gamma": abs(gamma - _gamma_from_policy(phi, S, cfg)),
        "origin_leak": leak,
    }


def run_bgp(cfg: BgpConfig, phi_init: Optional[DensityProfile] = None,
            v_init: Optional[ValueProfile] = None,
            gamma_init: Optional[float] = None) -> BgpSolution:
    """Damped fixed-point iteration for the balanced growth path"""
    grid = cfg.grid
    phi = phi_init if phi_init is not None else truncated_gaussian_density(grid, zero_origin=True)
    v = v_init if v_init is not None else ValueProfile(grid, grid.nodes / cfg.r)
    for profile in (phi, v):
        if not profile.grid.same_as(grid):
            raise InvalidInputException(
                f"initial profile lives on {profile.grid}, config on {grid}")
    if phi.values[0] != 0.0:
        phi = DensityProfile(grid, np.concatenate(([0.0], phi.values[1:]))).normalized()
    gamma = cfg.initial_gamma() if gamma_init is None else float(gamma_init)
    S, _ = policy_gamma_update(phi, v, cfg)
    median = density_median(phi) if cfg.nu == 0 else None

    logger.info(f"Starting BGP iteration: {grid}, nu={cfg.nu}, r={cfg.r}, "
                f"theta={cfg.theta}, omega={cfg.omega}, gamma0={gamma:.6g}")

    omega = cfg.omega
    converged = degenerate = False
    collapsed = crowded = 0
    history: List[Dict[str, float]] = []
    iteration = 0
    for iteration in range(1, cfg.max_iters + 1):
        phi_new = bgp_phi_step(phi, S, gamma, cfg, median)
        v_new = bgp_v_step(phi_new, v, S, gamma, cfg)
        S_new, gamma_new = policy_gamma_update(phi_new, v_new, cfg)

        phi_next = (1.0 - omega) * phi.values + omega * phi_new.values
        v_next = (1.0 - omega) * v.values + omega * v_new.values
        S_next = np.clip((1.0 - omega) * S.values + omega * S_new.values, 0.0, 1.0)
        gamma_next = (1.0 - omega) * gamma + omega * gamma_new

        change = max(
            _relative_change(phi_next, phi.values),
            _relative_change(v_next, v.values),
            abs(gamma_next - gamma) / max(abs(gamma_next), np.finfo(float).tiny),
        )
        falling = gamma_next < gamma
        phi = DensityProfile(grid, phi_next)
        v = ValueProfile(grid, v_next)
        S = PolicyProfile(grid, S_next)
        gamma = float(gamma_next)
        history.append({"iteration": iteration, "change": change, "gamma": gamma})
        logger.debug(f"BGP iteration {iteration}: change={change:.3e}, gamma={gamma:.8g}")

        if change < cfg.tol:
            converged = True
            break
        # collapse means mass piling up at the origin while gamma keeps falling;
        # a concentrated but stable density is a regular solution
        origin_mass = _origin_mass(phi)
        collapsed = collapsed + 1 if gamma < GAMMA_FLOOR else 0
        crowded = crowded + 1 if origin_mass > ORIGIN_MASS_LIMIT and falling else 0
        if max(collapsed, crowded) >= COLLAPSE_ITERATIONS:
            degenerate = True
            logger.warning(f"BGP iterate collapsing at iteration {iteration}: "
                           f"gamma={gamma:.3e}, origin mass={origin_mass:.3f}")
            break

    if not converged and not degenerate:
        degenerate = gamma < GAMMA_FLOOR or _origin_mass(phi) > ORIGIN_MASS_LIMIT
        logger.warning(f"BGP iteration did not converge in {cfg.max_iters} iterations "
                       f"(last change {history[-1]['change']:.3e}, degenerate={degenerate})")
    elif converged and gamma < GAMMA_FLOOR:
        degenerate = True

    B = b_functional(v, phi)
    x0 = find_x0(B, grid, cfg.lf)
    residuals = _residuals(phi, v, S, gamma, cfg, median)
    Phi = no_diffusion_profiles(phi, S, gamma, cfg, median)[1] if cfg.nu == 0 else None
    logger.info(f"BGP iteration finished: converged={converged}, iterations={iteration}, "
                f"gamma={gamma:.8g}, x0={x0.x0:.6g}")
    return BgpSolution(
        phi=phi, v=v, S=S, gamma=gamma, x0=x0, residuals=residuals,
        converged=converged, iterations=iteration, degenerate=degenerate, history=history,
        Phi=Phi,
    )


def bgp_production(solution: BgpSolution) -> float:
    """Y0 with Y(t) = exp(gamma t) Y0 along the growth path"""
    x = solution.grid.nodes
    return trapezoid((1.0 - solution.S.values) * x * solution.phi.values, solution.grid.h)


def rescale_to_time(solution: BgpSolution, t: float,
                    grid: UniformGrid) -> Tuple[DensityProfile, ValueProfile, PolicyProfile]:
    """Undo the growth rescaling: profiles of the original variables at time t on `grid`"""
    if t < 0:
        raise InvalidInputException(f"time must be non-negative, got {t}")
    growth = np.exp(solution.gamma * t)
    x_src = solution.grid.nodes
    x = grid.nodes / growth
    phi = np.interp(x, x_src, solution.phi.values, right=0.0) / growth
    v = np.interp(x, x_src, solution.v.values) * growth
    S = np.interp(x, x_src, solution.S.values)
    return DensityProfile(grid, phi), ValueProfile(grid, v), PolicyProfile(grid, S)
