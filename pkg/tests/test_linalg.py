import numpy as np
import pytest
import scipy.sparse as sparse

from kgrowth.core import TridiagonalOperator, UniformGrid, conservative_divergence, solve_bordered
from kgrowth.interfaces import InvalidInputException, SolverException


def _random_operator(rng, n):
    lower, upper = -rng.random(n), -rng.random(n)
    diag = 3.0 + rng.random(n)
    return TridiagonalOperator(lower, diag, upper)


class TestTridiagonalOperator:
    def test_solve_matches_dense(self, rng):
        op = _random_operator(rng, 12)
        rhs = rng.random(12)
        dense = op.to_sparse().toarray()
        np.testing.assert_allclose(op.solve(rhs), np.linalg.solve(dense, rhs), rtol=1e-12)

    def test_matvec_matches_sparse(self, rng):
        op = _random_operator(rng, 9)
        u = rng.random(9)
        np.testing.assert_allclose(op.matvec(u), op.to_sparse() @ u, rtol=1e-14)

    def test_arithmetic(self, rng):
        op = _random_operator(rng, 6)
        u = rng.random(6)
        shifted = (op - TridiagonalOperator.identity(6, 2.0)).shifted(2.0)
        np.testing.assert_allclose(shifted.matvec(u), op.matvec(u), rtol=1e-14)
        np.testing.assert_allclose(op.scaled(3.0).matvec(u), 3.0 * op.matvec(u), rtol=1e-14)

    def test_singular_solve_raises(self):
        op = TridiagonalOperator(np.zeros(4), np.array([1.0, 0.0, 1.0, 1.0]), np.zeros(4))
        with pytest.raises(SolverException):
            op.solve(np.ones(4))

    def test_band_lengths(self):
        with pytest.raises(InvalidInputException):
            TridiagonalOperator(np.zeros(3), np.ones(4), np.zeros(4))


class TestConservativeDivergence:
    def test_rows_sum_to_zero_under_weights(self, rng):
        g = UniformGrid(4.0, 30)
        op = conservative_divergence(g.weights, rng.random(30), rng.random(30))
        u = rng.random(g.size)
        assert g.weights @ op.matvec(u) == pytest.approx(0.0, abs=1e-12)

    def test_interface_count(self):
        g = UniformGrid(1.0, 10)
        with pytest.raises(InvalidInputException):
            conservative_divergence(g.weights, np.ones(11), np.ones(11))


class TestBorderedSolve:
    def test_constraint_and_equations(self, rng):
        n = 8
        M = _random_operator(rng, n).to_sparse()
        c, w, q = rng.random(n), rng.random(n), rng.random(n)
        u, lam = solve_bordered(M, c, w, q, 1.0)
        assert w @ u == pytest.approx(1.0, rel=1e-12)
        np.testing.assert_allclose(M @ u - lam * c, q, atol=1e-12)

    def test_singular_carries_dump(self):
        M = sparse.csc_matrix(np.zeros((3, 3)))
        with pytest.raises(SolverException) as info:
            solve_bordered(M, np.zeros(3), np.zeros(3), np.ones(3), 1.0, dump={"iteration": 4})
        assert info.value.dump == {"iteration": 4}
