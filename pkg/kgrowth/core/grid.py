"""
Uniform grids and trapezoidal quadrature

All profile types and solvers share the node layout x_i = x_min + i*h,
h = (x_max - x_min) / n_cells, i = 0..n_cells.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Tuple

import numpy as np
from scipy import integrate

from ..interfaces import InvalidInputException


@dataclass(frozen=True)
class UniformGrid:
    """Uniform discretization of the knowledge interval [x_min, x_max]"""
    x_max: float
    n_cells: int
    x_min: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.x_max) or not np.isfinite(self.x_min):
            raise InvalidInputException("grid bounds must be finite")
        if self.x_max <= self.x_min:
            raise InvalidInputException(
                f"x_max must exceed x_min, got [{self.x_min}, {self.x_max}]"
            )
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise InvalidInputException(f"n_cells must be an integer >= 2, got {self.n_cells}")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def size(self) -> int:
        """Number of nodes"""
        return self.n_cells + 1

    @cached_property
    def nodes(self) -> np.ndarray:
        nodes = self.x_min + self.h * np.arange(self.size, dtype=float)
        nodes.setflags(write=False)
        return nodes

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid weights, so that trapezoid(v, h) == weights @ v"""
        weights = np.full(self.size, self.h)
        weights[0] = weights[-1] = 0.5 * self.h
        weights.setflags(write=False)
        return weights

    def index_of(self, x: float) -> int:
        """Index of the last node at or left of x (clamped to the grid)"""
        idx = int(np.floor((x - self.x_min) / self.h + 1e-12))
        return min(max(idx, 0), self.n_cells)

    def same_as(self, other: "UniformGrid") -> bool:
        return (
            self.n_cells == other.n_cells
            and np.isclose(self.x_max, other.x_max, rtol=0, atol=1e-12 * abs(self.x_max))
            and np.isclose(self.x_min, other.x_min, rtol=0, atol=1e-12 * max(1.0, abs(self.x_min)))
        )

    def __repr__(self) -> str:
        return f"UniformGrid([{self.x_min}, {self.x_max}], n_cells={self.n_cells})"


def trapezoid(values, h: float) -> float:
    """Composite trapezoid rule h*(v0/2 + v1 + ... + v_{N-1} + v_N/2)"""
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise InvalidInputException("trapezoid needs at least 2 samples")
    if not h > 0:
        raise InvalidInputException(f"spacing must be positive, got {h}")
    return float(integrate.trapezoid(values, dx=h))


def cumulative_trapezoid(values, h: float) -> np.ndarray:
    """Running trapezoid integral from the first node, starting at 0"""
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise InvalidInputException("cumulative trapezoid needs at least 2 samples")
    return integrate.cumulative_trapezoid(values, dx=h, initial=0.0)


def tail_trapezoid(values, h: float) -> np.ndarray:
    """Trapezoid integral from each node to the last node"""
    values = np.asarray(values, dtype=float)
    return cumulative_trapezoid(values[::-1], h)[::-1]


def conservative_tail_integrals(values, weights) -> Tuple[np.ndarray, np.ndarray]:
    """Left and right running integrals with half self-weight.

    left_i  = sum_{j<i} w_j v_j + w_i v_i / 2
    right_i = sum_{j>i} w_j v_j + w_i v_i / 2

    At interior nodes these coincide with the trapezoid integrals over
    [x_0, x_i] and [x_i, x_N]. For any a, f the weighted identity
    sum_i w_i f_i left(a)_i == sum_i w_i a_i right(f)_i holds exactly, which
    makes the discrete gain and loss terms of the collision operator cancel.
    """
    weighted = np.asarray(weights, dtype=float) * np.asarray(values, dtype=float)
    half = 0.5 * weighted
    left = np.cumsum(weighted) - half
    right = np.cumsum(weighted[::-1])[::-1] - half
    return left, right
