"""
Measurements on solver output: production, growth rates, Pareto tails,
degeneracy and travelling-front speeds
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from .core.grid import UniformGrid, trapezoid
from .core.profiles import CdfProfile, DensityProfile
from .interfaces import InvalidInputException
from .solvers.bgp_solver import GAMMA_FLOOR, ORIGIN_FRACTION, ORIGIN_MASS_LIMIT, BgpSolution, \
    bgp_production
from .solvers.td_solver import KppTrace, TdTrace

logger = logging.getLogger(__name__)

DEFAULT_GROWTH_WINDOW = 0.25
PARETO_BAND = (1e-6, 1e-1)
PARETO_MIN_SAMPLES = 10
PARETO_RESIDUAL_LIMIT = 1e-2


@dataclass
class GrowthReport:
    """Exponential fit log Y ~ gamma_hat t over the window [t_start, t_end]"""
    gamma_hat: float
    t_start: float
    t_end: float
    r_squared: float
    monotone: bool
    fitted: bool = True

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class ParetoFit:
    """Tail fit 1 - Phi ~ k_hat x^(-1/theta_hat) over [x_start, x_end]"""
    theta_hat: float
    k_hat: float
    x_start: float
    x_end: float
    residual: float
    n_samples: int

    @property
    def is_pareto(self) -> bool:
        return self.residual <= PARETO_RESIDUAL_LIMIT

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["is_pareto"] = self.is_pareto
        return data


@dataclass
class DegeneracyReport:
    degenerate: bool
    origin_mass: float
    production_decreasing: bool
    gamma: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def production_series(source: Union[TdTrace, BgpSolution]):
    """Y(t_k) for a time-dependent trace, or the constant Y0 of a growth path"""
    if isinstance(source, TdTrace):
        return source.production
    if isinstance(source, BgpSolution):
        return bgp_production(source)
    raise InvalidInputException(f"cannot compute production for {type(source).__name__}")


def growth_rate_fit(t: Sequence[float], Y: Sequence[float],
                    window_fraction: float = DEFAULT_GROWTH_WINDOW) -> GrowthReport:
    t = np.asarray(t, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if t.shape != Y.shape or t.size < 2:
        raise InvalidInputException("t and Y must be matching series of at least 2 samples")
    if not 0.0 < window_fraction <= 1.0:
        raise InvalidInputException(f"window_fraction must lie in (0, 1], got {window_fraction}")

    count = max(2, math.ceil(window_fraction * t.size))
    t_w, Y_w = t[-count:], Y[-count:]
    monotone = bool(np.all(np.diff(Y_w) >= 0.0))
    if np.any(Y_w <= 0.0):
        logger.warning("Non-positive production in the fit window; skipping exponential fit")
        return GrowthReport(0.0, float(t_w[0]), float(t_w[-1]), 0.0, monotone, fitted=False)

    log_y = np.log(Y_w)
    slope, intercept = np.polyfit(t_w, log_y, 1)
    ss_res = float(np.sum((log_y - (slope * t_w + intercept)) ** 2))
    ss_tot = float(np.sum((log_y - log_y.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)
    return GrowthReport(float(slope), float(t_w[0]), float(t_w[-1]), r_squared, monotone)


def _default_pareto_window(x: np.ndarray, tail: np.ndarray) -> Tuple[float, float]:
    lo, hi = PARETO_BAND
    band = (x > 0) & (tail >= lo) & (tail <= hi)
    if not np.any(band):
        raise InvalidInputException(f"1 - Phi never lies in [{lo:g}, {hi:g}]")
    x_lo, x_hi = float(x[band].min()), float(x[band].max())
    # last full decade of the band
    return (x_hi / 10.0, x_hi) if x_hi / x_lo >= 10.0 else (x_lo, x_hi)


def pareto_fit_samples(x: Sequence[float], Phi: Sequence[float],
                       window: Optional[Tuple[float, float]] = None) -> ParetoFit:
    """Regress log(1 - Phi) on log x inside the window"""
    x = np.asarray(x, dtype=float)
    tail = 1.0 - np.asarray(Phi, dtype=float)
    x_start, x_end = window if window is not None else _default_pareto_window(x, tail)

    mask = (x >= x_start) & (x <= x_end) & (x > 0) & (tail > 0)
    if mask.sum() < PARETO_MIN_SAMPLES:
        raise InvalidInputException(
            f"Pareto window [{x_start:g}, {x_end:g}] holds {mask.sum()} samples, "
            f"need {PARETO_MIN_SAMPLES}"
        )

    log_x, log_tail = np.log(x[mask]), np.log(tail[mask])
    slope, intercept = np.polyfit(log_x, log_tail, 1)
    if slope >= 0:
        raise InvalidInputException(f"tail is not decaying in the window (slope {slope:.3g})")
    residual = float(np.sqrt(np.mean((log_tail - (slope * log_x + intercept)) ** 2)))
    return ParetoFit(
        theta_hat=float(-1.0 / slope),
        k_hat=float(np.exp(intercept)),
        x_start=float(x_start),
        x_end=float(x_end),
        residual=residual,
        n_samples=int(mask.sum()),
    )


def pareto_fit(Phi: CdfProfile, window: Optional[Tuple[float, float]] = None) -> ParetoFit:
    return pareto_fit_samples(Phi.x, Phi.values, window)


def _origin_fraction(values: np.ndarray, grid: UniformGrid) -> float:
    total = trapezoid(values, grid.h)
    if total <= 0:
        return 0.0
    cut = max(1, int(np.floor(ORIGIN_FRACTION * grid.n_cells)))
    return trapezoid(values[:cut + 1], grid.h) / total


def degeneracy_check(source: Union[TdTrace, BgpSolution, DensityProfile]) -> DegeneracyReport:
    """Collapse of the distribution onto zero knowledge"""
    gamma = None
    decreasing = False
    if isinstance(source, TdTrace):
        origin = _origin_fraction(source.f[-1], source.grid)
        Y = source.production
        quarter = Y[-max(2, math.ceil(0.25 * Y.size)):]
        decreasing = bool(np.all(np.diff(quarter) < 0.0))
    elif isinstance(source, BgpSolution):
        origin = _origin_fraction(source.phi.values, source.grid)
        gamma = source.gamma
    elif isinstance(source, DensityProfile):
        origin = _origin_fraction(source.values, source.grid)
    else:
        raise InvalidInputException(f"cannot check degeneracy of {type(source).__name__}")

    degenerate = origin > ORIGIN_MASS_LIMIT or decreasing \
        or (gamma is not None and gamma < GAMMA_FLOOR)
    if degenerate:
        logger.info(f"Degenerate state: origin mass {origin:.3f}, decreasing={decreasing}, "
                    f"gamma={gamma}")
    return DegeneracyReport(bool(degenerate), float(origin), decreasing, gamma)


def _crossing(y: np.ndarray, G: np.ndarray, level: float, index: int) -> float:
    steps = np.diff(G)
    if not (np.all(steps <= 1e-12) or np.all(steps >= -1e-12)):
        raise InvalidInputException(f"snapshot {index} is not monotone")
    d = G - level
    hits = np.flatnonzero(d[:-1] * d[1:] <= 0.0)
    hits = hits[(d[hits] != 0.0) | (d[hits + 1] != 0.0)]
    if hits.size == 0:
        raise InvalidInputException(f"snapshot {index} does not cross level {level}")
    i = int(hits[0])
    if d[i] == d[i + 1]:
        return float(y[i])
    return float(y[i] + d[i] / (d[i] - d[i + 1]) * (y[i + 1] - y[i]))


def front_positions(y: Sequence[float], G: np.ndarray, level: float = 0.5) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return np.array([_crossing(y, row, level, k) for k, row in enumerate(np.asarray(G))])


def front_speed_samples(times: Sequence[float], y: Sequence[float], G: np.ndarray,
                        level: float = 0.5) -> float:
    """Least-squares slope of the level crossing over the second half of the run"""
    times = np.asarray(times, dtype=float)
    positions = front_positions(y, G, level)
    late = times >= times[0] + 0.5 * (times[-1] - times[0])
    if late.sum() < 2:
        raise InvalidInputException("need at least two snapshots in the second half")
    slope, _ = np.polyfit(times[late], positions[late], 1)
    return float(slope)


def front_speed(trace: KppTrace, level: float = 0.5) -> float:
    return front_speed_samples(trace.times, trace.grid.nodes, trace.G, level)
