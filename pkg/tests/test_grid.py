import numpy as np
import pytest

from kgrowth.core import (
    UniformGrid, conservative_tail_integrals, cumulative_trapezoid, tail_trapezoid, trapezoid
)
from kgrowth.interfaces import InvalidInputException


class TestUniformGrid:
    def test_nodes_and_spacing(self):
        g = UniformGrid(20.0, 1000)
        assert g.h == pytest.approx(0.02)
        assert g.size == 1001
        assert g.nodes[0] == 0.0
        assert g.nodes[-1] == pytest.approx(20.0)

    def test_shifted_origin(self):
        g = UniformGrid(45.0, 2000, x_min=-5.0)
        assert g.h == pytest.approx(0.025)
        assert g.nodes[0] == -5.0
        assert g.nodes[200] == pytest.approx(0.0)

    def test_arrays_are_read_only(self):
        g = UniformGrid(1.0, 10)
        with pytest.raises(ValueError):
            g.nodes[0] = 3.0
        with pytest.raises(ValueError):
            g.weights[0] = 3.0

    @pytest.mark.parametrize("x_max, n_cells", [(0.0, 10), (-1.0, 10), (1.0, 1), (np.inf, 10)])
    def test_rejects_bad_layout(self, x_max, n_cells):
        with pytest.raises(InvalidInputException):
            UniformGrid(x_max, n_cells)

    def test_index_of_clamps(self):
        g = UniformGrid(10.0, 100)
        assert g.index_of(0.55) == 5
        assert g.index_of(-3.0) == 0
        assert g.index_of(99.0) == 100

    def test_same_as(self):
        assert UniformGrid(20.0, 100).same_as(UniformGrid(20.0, 100))
        assert not UniformGrid(20.0, 100).same_as(UniformGrid(20.0, 101))
        assert not UniformGrid(20.0, 100).same_as(UniformGrid(10.0, 100))


class TestTrapezoid:
    def test_exact_for_linear(self):
        g = UniformGrid(2.0, 8)
        assert trapezoid(3.0 * g.nodes + 1.0, g.h) == pytest.approx(8.0)

    def test_weights_match_rule(self, rng):
        g = UniformGrid(3.0, 17)
        v = rng.random(g.size)
        assert g.weights @ v == pytest.approx(trapezoid(v, g.h))

    def test_needs_two_samples(self):
        with pytest.raises(InvalidInputException):
            trapezoid([1.0], 0.1)

    def test_cumulative_and_tail_split_total(self, rng):
        g = UniformGrid(1.0, 50)
        v = rng.random(g.size)
        total = trapezoid(v, g.h)
        left = cumulative_trapezoid(v, g.h)
        right = tail_trapezoid(v, g.h)
        assert left[0] == 0.0 and right[-1] == 0.0
        np.testing.assert_allclose(left + right, total, rtol=1e-13)


class TestConservativeTailIntegrals:
    def test_interior_nodes_match_trapezoid(self, rng):
        g = UniformGrid(1.0, 40)
        v = rng.random(g.size)
        left, right = conservative_tail_integrals(v, g.weights)
        np.testing.assert_allclose(left[1:-1], cumulative_trapezoid(v, g.h)[1:-1], rtol=1e-12)
        np.testing.assert_allclose(right[1:-1], tail_trapezoid(v, g.h)[1:-1], rtol=1e-12)

    def test_exchange_identity(self, rng):
        g = UniformGrid(5.0, 64)
        a, f = rng.random(g.size), rng.random(g.size)
        left_a, _ = conservative_tail_integrals(a, g.weights)
        _, right_f = conservative_tail_integrals(f, g.weights)
        assert g.weights @ (f * left_a) == pytest.approx(g.weights @ (a * right_f), rel=1e-13)
