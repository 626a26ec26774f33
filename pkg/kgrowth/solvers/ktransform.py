"""
Tail-exact Boltzmann side of the growth problem without diffusion

With xt = x^(-1/theta) and Phi(x) = 1 - (gamma / theta) xt K(xt), the Pareto tail
condition becomes the initial value K(0) = k~ and the stationary density
equation becomes

    xt K' = -K I,    I(xt) = int_0^xt alpha(S~) (K xi)' dxi,    I' = alpha(S~) K (1 - I)

for a given policy S~ on the xt axis. The growth rate is theta over the limit
of xt K(xt), which is read off dyadic samples beyond the grid.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator

from ..core.grid import UniformGrid
from ..core.learning import LearningLaw
from ..core.profiles import CdfProfile, PolicyProfile
from ..interfaces import (
    DomainException, ExtrapolationException, IntegrationException, InvalidInputException,
    InvariantReport
)

logger = logging.getLogger(__name__)

INVARIANT_TOL = 1e-8
SATURATION_TOL = 1e-4
CONSTRAINT_TOL = 1e-3
BOUND_TOL = 1e-3
MAX_DOUBLINGS = 60
SAMPLES_PER_DOUBLING = 16
_RTOL = 1e-10
_ATOL = 1e-14


@dataclass(frozen=True, eq=False)
class KProfile:
    """Solution of the K equation on an xt grid plus its dyadic tail"""
    grid: UniformGrid
    values: np.ndarray
    running_integral: np.ndarray
    k_tilde: float
    theta: float
    alpha_one: float
    S_tilde: PolicyProfile
    x0_tilde: float
    tail_x: np.ndarray
    tail_xk: np.ndarray
    tail_integral: float
    limit: Optional[float]

    @property
    def xk(self) -> np.ndarray:
        return self.grid.nodes * self.values

    @property
    def tail_saturated(self) -> bool:
        return self.limit is not None

    def pareto_coefficient(self, gamma: float) -> float:
        """k with 1 - Phi(x) ~ k x^(-1/theta)"""
        return gamma / self.theta * self.k_tilde

    def xk_at(self, xt: np.ndarray) -> np.ndarray:
        """xt K(xt) at arbitrary xt >= 0, the extrapolated limit beyond the last sample"""
        xt = np.asarray(xt, dtype=float)
        x_all = np.concatenate((self.grid.nodes[1:], self.tail_x))
        p_all = np.concatenate((self.xk[1:], self.tail_xk))
        interp = PchipInterpolator(np.log(x_all), p_all, extrapolate=False)

        out = np.empty_like(xt)
        first = x_all[0]
        small = xt < first
        out[small] = xt[small] * np.interp(xt[small], self.grid.nodes[:2], self.values[:2])
        beyond = xt > x_all[-1]
        out[beyond] = self._continue_tail(xt[beyond])
        middle = ~small & ~beyond
        out[middle] = interp(np.log(xt[middle]))
        return out

    def _continue_tail(self, xt: np.ndarray) -> np.ndarray:
        """xt K beyond the last sample as L - a/xt - b/xt^2 through the last two doublings"""
        if self.limit is None or self.tail_x.size <= SAMPLES_PER_DOUBLING:
            return np.full_like(xt, self.tail_xk[-1] if self.tail_x.size else self.xk[-1])
        x1, x2 = self.tail_x[-SAMPLES_PER_DOUBLING - 1], self.tail_x[-1]
        d1 = self.limit - self.tail_xk[-SAMPLES_PER_DOUBLING - 1]
        d2 = self.limit - self.tail_xk[-1]
        a, b = np.linalg.solve([[1.0 / x1, 1.0 / x1 ** 2], [1.0 / x2, 1.0 / x2 ** 2]], [d1, d2])
        return self.limit - a / xt - b / xt ** 2


def _threshold_tilde(S_tilde: PolicyProfile) -> float:
    """First xt from which S~ = 1"""
    saturated = np.flatnonzero(S_tilde.values >= 1.0 - 1e-12)
    if saturated.size == 0 or not np.all(S_tilde.values[saturated[0]:] >= 1.0 - 1e-12):
        return float("inf")
    return float(S_tilde.x[saturated[0]])


def _decade_change(x: np.ndarray, xk: np.ndarray) -> float:
    """Relative change of xt K between xt_end / 10 and xt_end"""
    back = float(np.interp(np.log(x[-1] / 10.0), np.log(x), xk))
    return abs(xk[-1] - back) / abs(xk[-1])


def _richardson(p_quarter: float, p_half: float, p_full: float) -> float:
    """Limit of P(x) = L + a/x + b/x^2 from samples at x/4, x/2, x"""
    return (p_quarter - 6.0 * p_half + 8.0 * p_full) / 3.0


def _check_profile(x: np.ndarray, K: np.ndarray, I: np.ndarray, k_tilde: float) -> None:
    tol = INVARIANT_TOL * max(1.0, k_tilde)
    bad = np.flatnonzero(K <= 0.0)
    if bad.size:
        raise IntegrationException(f"K became non-positive at xt={x[bad[0]]:.6g}", float(x[bad[0]]))
    bad = np.flatnonzero(K > k_tilde + tol)
    if bad.size:
        raise IntegrationException(f"K exceeds k~ at xt={x[bad[0]]:.6g}", float(x[bad[0]]))
    bad = np.flatnonzero(np.diff(K) > tol)
    if bad.size:
        raise IntegrationException(f"K increases at xt={x[bad[0] + 1]:.6g}", float(x[bad[0] + 1]))
    bad = np.flatnonzero(np.diff(x * K) < -tol)
    if bad.size:
        raise IntegrationException(f"xt K decreases at xt={x[bad[0] + 1]:.6g}",
                                   float(x[bad[0] + 1]))
    bad = np.flatnonzero(I > 1.0 + INVARIANT_TOL)
    if bad.size:
        raise IntegrationException(f"running integral exceeds 1 at xt={x[bad[0]]:.6g}",
                                   float(x[bad[0]]))


def solve_k(k_tilde: float, S_tilde: PolicyProfile, theta: float, lf: LearningLaw,
            max_doublings: int = MAX_DOUBLINGS) -> KProfile:
    if not k_tilde > 0:
        raise InvalidInputException(f"k~ must be positive, got {k_tilde}")
    if not 0.0 < theta < 1.0:
        raise InvalidInputException(f"theta must lie in (0, 1), got {theta}")
    grid = S_tilde.grid
    if grid.x_min != 0.0:
        raise InvalidInputException("the xt grid must start at 0")
    if np.any(np.diff(S_tilde.values) < -INVARIANT_TOL):
        raise InvalidInputException("S~ must be non-decreasing in xt")

    nodes = grid.nodes
    s_values = S_tilde.values
    alpha_nodes = lf.value(s_values)
    alpha_end = float(alpha_nodes[-1])

    def rhs(xt: float, y: np.ndarray) -> np.ndarray:
        K, I = y
        a = float(np.interp(xt, nodes, alpha_nodes)) if xt <= nodes[-1] else alpha_end
        if xt <= 0.0:
            # I / xt -> alpha(S~(0)) k~ at the origin
            return np.array([-a * K * K, a * K])
        return np.array([-K * I / xt, a * K * (1.0 - I)])

    sol = solve_ivp(rhs, (0.0, nodes[-1]), [k_tilde, 0.0], method="RK45",
                    t_eval=nodes, rtol=_RTOL, atol=_ATOL * k_tilde)
    if sol.status < 0 or sol.y.shape[1] != nodes.size:
        raise IntegrationException(f"K integration failed: {sol.message}")
    K, I = sol.y
    _check_profile(nodes, K, I, k_tilde)

    # dyadic continuation with S~ frozen at its last value
    tail_x, tail_xk = [], []
    dyadic = [nodes[-1] * K[-1]]
    state = np.array([K[-1], I[-1]])
    start = nodes[-1]
    limit = None
    estimates = []
    for _ in range(max_doublings):
        points = start * np.power(2.0, np.linspace(0.0, 1.0, SAMPLES_PER_DOUBLING + 1))[1:]
        seg = solve_ivp(rhs, (start, points[-1]), state, method="RK45", t_eval=points,
                        rtol=_RTOL, atol=_ATOL * k_tilde)
        if seg.status < 0:
            raise IntegrationException(f"tail integration failed: {seg.message}", float(start))
        _check_profile(points, seg.y[0], seg.y[1], k_tilde)
        tail_x.extend(points)
        tail_xk.extend(points * seg.y[0])
        state = seg.y[:, -1]
        start = points[-1]
        dyadic.append(start * state[0])

        if len(dyadic) >= 3:
            estimates.append(_richardson(*dyadic[-3:]))
        if len(estimates) < 2:
            continue
        last, prev = estimates[-1], estimates[-2]
        # accept once I is within CONSTRAINT_TOL of 1 and xt K is flat over the last decade
        settled = abs(last - prev) <= SATURATION_TOL * abs(last)
        if settled and abs(1.0 - state[1]) < CONSTRAINT_TOL:
            x_seen = np.concatenate((nodes[1:], tail_x))
            xk_seen = np.concatenate((nodes[1:] * K[1:], tail_xk))
            if _decade_change(x_seen, xk_seen) < SATURATION_TOL:
                limit = float(last)
                break

    if limit is None:
        logger.warning(f"xt K has not saturated after {max_doublings} doublings "
                       f"(reached xt={start:.3g}, |1 - I| = {abs(1.0 - state[1]):.3e})")

    return KProfile(
        grid=grid, values=K, running_integral=I, k_tilde=float(k_tilde), theta=float(theta),
        alpha_one=lf.alpha_one, S_tilde=S_tilde, x0_tilde=_threshold_tilde(S_tilde),
        tail_x=np.array(tail_x), tail_xk=np.array(tail_xk), tail_integral=float(state[1]),
        limit=limit,
    )


def _lower_gamma_bound(kp: KProfile) -> float:
    return 1.0 / (kp.k_tilde * kp.x0_tilde + 1.0 / kp.alpha_one)


def gamma_from_k(kp: KProfile) -> float:
    """gamma = theta / lim xt K(xt)"""
    if kp.limit is None:
        raise ExtrapolationException(
            "xt K has not saturated; extend the xt grid or allow more doublings"
        )
    if not kp.limit > 0:
        raise ExtrapolationException(f"extrapolated limit {kp.limit:.3e} is not positive")
    gamma = kp.theta / kp.limit
    ratio = gamma / kp.theta
    upper, lower = kp.alpha_one, _lower_gamma_bound(kp)
    if ratio > upper * (1.0 + BOUND_TOL) or ratio < lower * (1.0 - BOUND_TOL):
        raise IntegrationException(
            f"gamma/theta = {ratio:.6g} outside [{lower:.6g}, {upper:.6g}]"
        )
    return gamma


def phi_from_k(kp: KProfile, gamma: float, x_grid: UniformGrid) -> CdfProfile:
    """Phi(x) = 1 - (gamma / theta) xt K(xt) with xt = x^(-1/theta), sampled on x_grid"""
    if not gamma > 0:
        raise DomainException(f"gamma must be positive, got {gamma}")
    x = x_grid.nodes
    out = np.zeros_like(x)
    positive = x > 0
    xt = np.power(x[positive], -1.0 / kp.theta)
    out[positive] = 1.0 - gamma / kp.theta * kp.xk_at(xt)
    out[~positive] = 0.0
    return CdfProfile(x_grid, np.clip(out, 0.0, 1.0))


def policy_to_ktilde(S: PolicyProfile, k_grid: UniformGrid, theta: float) -> PolicyProfile:
    """Map a policy on the x grid to S~(xt) = S(xt^(-theta))"""
    with np.errstate(divide="ignore"):
        x = np.power(k_grid.nodes, -theta)
    values = np.interp(x, S.x, S.values, left=S.values[0], right=S.values[-1])
    return PolicyProfile(k_grid, values)


def check_k_bounds(kp: KProfile, gamma: Optional[float] = None) -> InvariantReport:
    report = InvariantReport("k_profile")
    xt = kp.grid.nodes
    K = kp.values
    tol = INVARIANT_TOL

    rise = float(np.max(np.diff(K), initial=0.0))
    report.add("k_non_increasing", rise <= tol, rise)
    report.add("k_within_bounds", bool(K.min() > 0 and K.max() <= kp.k_tilde + tol),
               float(K.max()))
    drop = float(np.min(np.diff(xt * K), initial=0.0))
    report.add("xk_non_decreasing", drop >= -tol, drop)
    report.add("running_integral_below_one", float(kp.running_integral.max()) <= 1.0 + tol,
               float(kp.running_integral.max()))

    floor = 1.0 / (1.0 / kp.k_tilde + kp.alpha_one * xt)
    gap = float(np.min(K - floor))
    report.add("k_lower_bound", gap >= -tol, gap)

    if np.isfinite(kp.x0_tilde):
        cap = kp.k_tilde * kp.x0_tilde + 1.0 / kp.alpha_one
        above = xt >= kp.x0_tilde
        excess = float(np.max(xt[above] * K[above] - cap, initial=-np.inf))
        report.add("xk_upper_bound", excess <= tol, excess)

    if gamma is not None:
        ratio = gamma / kp.theta
        lower = _lower_gamma_bound(kp)
        report.add("gamma_over_theta_interval",
                   lower * (1.0 - BOUND_TOL) <= ratio <= kp.alpha_one * (1.0 + BOUND_TOL), ratio,
                   f"[{lower:.6g}, {kp.alpha_one:.6g}]")
    return report
