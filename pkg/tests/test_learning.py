import numpy as np
import pytest

from kgrowth.core import LearningFunction, alpha_eval
from kgrowth.interfaces import DomainException, InvalidInputException


class TestLearningFunction:
    def test_values(self, power_law):
        assert power_law.value(1.0) == pytest.approx(0.075)
        assert power_law.value(0.0) == 0.0
        assert power_law.value(0.5) == pytest.approx(0.075 * 0.5 ** 0.3)

    def test_derivative_unbounded_at_zero(self, power_law):
        assert power_law.derivative(0.0) == np.inf
        assert power_law.derivative_one == pytest.approx(0.0225)

    def test_vectorised(self, power_law):
        s = np.array([0.0, 0.25, 1.0])
        np.testing.assert_allclose(power_law.value(s), 0.075 * s ** 0.3)

    def test_evaluate_pair(self, power_law):
        value, deriv = power_law.evaluate(0.2)
        assert value == pytest.approx(0.075 * 0.2 ** 0.3)
        assert deriv == pytest.approx(0.075 * 0.3 * 0.2 ** -0.7)
        assert alpha_eval(power_law, 0.2) == (value, deriv)
        assert alpha_eval(power_law, 0.0) == (0.0, np.inf)

    def test_concave_on_random_chords(self, rng):
        for _ in range(1000):
            lf = LearningFunction(rng.uniform(1e-3, 1.0), rng.uniform(0.05, 0.95))
            s1, s2 = rng.uniform(0.0, 1.0, 2)
            weight = rng.uniform(0.0, 1.0)
            chord = weight * lf.value(s1) + (1.0 - weight) * lf.value(s2)
            assert lf.value(weight * s1 + (1.0 - weight) * s2) >= chord - 1e-14

    @pytest.mark.parametrize("s", [-0.1, 1.1, np.nan])
    def test_rejects_outside_unit_interval(self, power_law, s):
        with pytest.raises(DomainException):
            power_law.value(s)

    @pytest.mark.parametrize("alpha0, n_exp", [(0.0, 0.3), (0.1, 0.0), (0.1, 1.0)])
    def test_rejects_bad_parameters(self, alpha0, n_exp):
        with pytest.raises(InvalidInputException):
            LearningFunction(alpha0, n_exp)

    def test_marginal_inverts_derivative(self, power_law):
        for ratio in (0.03, 0.1, 1.0, 50.0):
            s = power_law.solve_marginal(ratio)
            assert power_law.derivative(s) == pytest.approx(ratio, rel=1e-10)

    def test_marginal_saturates(self, power_law):
        assert power_law.solve_marginal(0.01) == 1.0
        np.testing.assert_allclose(power_law.solve_marginal_array(np.array([0.01, 1.0])),
                                   [1.0, power_law.solve_marginal(1.0)])


class TestConstantLearning:
    def test_flat(self, constant_law):
        assert constant_law.value(0.3) == 0.075
        assert constant_law.derivative(0.3) == 0.0
        np.testing.assert_allclose(constant_law.value(np.zeros(3)), 0.075)
        assert constant_law.is_constant

    def test_marginal(self, constant_law):
        assert constant_law.solve_marginal(0.0) == 1.0
        assert constant_law.solve_marginal(0.5) == 0.0
