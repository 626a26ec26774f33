"""
Tridiagonal operators and the linear solves behind every implicit step

A row i of a TridiagonalOperator reads
    lower[i] * u[i-1] + diag[i] * u[i] + upper[i] * u[i+1]
with lower[0] and upper[-1] ignored.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse as sparse
import scipy.sparse.linalg

from ..interfaces import InvalidInputException, SolverException

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    """Three-band matrix stored by diagonals"""
    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.diag).size
        if n < 2 or np.asarray(self.lower).size != n or np.asarray(self.upper).size != n:
            raise InvalidInputException("tridiagonal bands must share a length >= 2")
        for name in ("lower", "diag", "upper"):
            band = np.array(getattr(self, name), dtype=float)
            band.setflags(write=False)
            object.__setattr__(self, name, band)

    @property
    def size(self) -> int:
        return self.diag.size

    @classmethod
    def identity(cls, n: int, scale: float = 1.0) -> "TridiagonalOperator":
        return cls(np.zeros(n), np.full(n, float(scale)), np.zeros(n))

    def __add__(self, other: "TridiagonalOperator") -> "TridiagonalOperator":
        return TridiagonalOperator(self.lower + other.lower, self.diag + other.diag,
                                   self.upper + other.upper)

    def __sub__(self, other: "TridiagonalOperator") -> "TridiagonalOperator":
        return self + other.scaled(-1.0)

    def scaled(self, factor: float) -> "TridiagonalOperator":
        return TridiagonalOperator(factor * self.lower, factor * self.diag, factor * self.upper)

    def shifted(self, shift) -> "TridiagonalOperator":
        """Add a scalar or per-row vector to the diagonal"""
        return TridiagonalOperator(self.lower, self.diag + shift, self.upper)

    def matvec(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        out = self.diag * u
        out[1:] += self.lower[1:] * u[:-1]
        out[:-1] += self.upper[:-1] * u[1:]
        return out

    def to_sparse(self) -> sparse.csc_matrix:
        return sparse.diags(
            [self.lower[1:], self.diag, self.upper[:-1]], offsets=[-1, 0, 1], format="csc"
        )

    def banded(self) -> np.ndarray:
        """(1, 1) banded layout expected by scipy.linalg.solve_banded"""
        ab = np.zeros((3, self.size))
        ab[0, 1:] = self.upper[:-1]
        ab[1] = self.diag
        ab[2, :-1] = self.lower[1:]
        return ab

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        try:
            u = scipy.linalg.solve_banded((1, 1), self.banded(), rhs, check_finite=True)
        except (np.linalg.LinAlgError, ValueError) as e:
            raise SolverException(f"tridiagonal solve failed: {e}") from e
        if not np.all(np.isfinite(u)):
            raise SolverException("tridiagonal solve returned non-finite values")
        return u


def conservative_divergence(weights: np.ndarray, a: np.ndarray,
                            b: np.ndarray) -> TridiagonalOperator:
    """Flux-form divergence with no flux through either end.

    Interface fluxes are J_{i+1/2} = a[i] * u[i] + b[i] * u[i+1] for the
    n - 1 interior interfaces, and row i is (J_{i+1/2} - J_{i-1/2}) / w[i].
    Summing rows against the weights telescopes to zero, so the operator
    conserves the trapezoid integral exactly.
    """
    weights = np.asarray(weights, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = weights.size
    if a.size != n - 1 or b.size != n - 1:
        raise InvalidInputException(f"expected {n - 1} interface coefficients")

    a_right = np.append(a, 0.0)          # J_{i+1/2} coefficient of u[i]
    b_left = np.insert(b, 0, 0.0)        # J_{i-1/2} coefficient of u[i]
    diag = (a_right - b_left) / weights
    upper = np.append(b, 0.0) / weights
    lower = -np.insert(a, 0, 0.0) / weights
    return TridiagonalOperator(lower, diag, upper)


def solve_bordered(matrix: sparse.spmatrix, column: np.ndarray, row: np.ndarray,
                   rhs: np.ndarray, row_value: float,
                   dump: Optional[Dict[str, Any]] = None) -> Tuple[np.ndarray, float]:
    """Solve [[M, -c], [w^T, 0]] [u, lam] = [rhs, row_value].

    Couples one linear constraint w.u = row_value to a square system through
    a single multiplier column. Raises SolverException carrying `dump` when
    the factorisation fails or produces non-finite values.
    """
    n = matrix.shape[0]
    bordered = sparse.bmat([
        [matrix, sparse.csc_matrix(-np.asarray(column, dtype=float).reshape(n, 1))],
        [sparse.csc_matrix(np.asarray(row, dtype=float).reshape(1, n)), None],
    ], format="csc")
    full_rhs = np.append(np.asarray(rhs, dtype=float), float(row_value))
    try:
        solution = scipy.sparse.linalg.spsolve(bordered, full_rhs)
    except RuntimeError as e:
        raise SolverException(f"bordered solve failed: {e}", dump) from e
    if not np.all(np.isfinite(solution)):
        logger.warning("Bordered system returned non-finite values")
        raise SolverException("bordered system is singular or ill-conditioned", dump)
    return solution[:n], float(solution[n])
