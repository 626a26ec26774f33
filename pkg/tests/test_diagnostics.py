import numpy as np
import pytest

from kgrowth.core import DensityProfile, UniformGrid, truncated_gaussian_density
from kgrowth.diagnostics import (
    degeneracy_check, front_positions, front_speed_samples, growth_rate_fit, pareto_fit,
    pareto_fit_samples, production_series
)
from kgrowth.interfaces import InvalidInputException
from kgrowth.solvers import TdConfig, ParetoParams, constant_alpha_bgp, pareto_cdf, run_td


class TestGrowthRateFit:
    def test_recovers_exponential(self):
        t = np.linspace(0.0, 100.0, 1001)
        report = growth_rate_fit(t, 3.0 * np.exp(0.02 * t))
        assert report.fitted and report.monotone
        assert report.gamma_hat == pytest.approx(0.02, rel=1e-10)
        assert report.r_squared == pytest.approx(1.0)
        assert report.t_start == pytest.approx(75.0, abs=0.2)

    def test_decay_is_flagged(self):
        t = np.linspace(0.0, 10.0, 101)
        report = growth_rate_fit(t, np.exp(-0.1 * t))
        assert report.gamma_hat < 0 and not report.monotone

    def test_non_positive_production(self):
        t = np.linspace(0.0, 10.0, 11)
        report = growth_rate_fit(t, np.zeros(11))
        assert not report.fitted and report.gamma_hat == 0.0

    def test_shape_checks(self):
        with pytest.raises(InvalidInputException):
            growth_rate_fit([0.0, 1.0], [1.0])
        with pytest.raises(InvalidInputException):
            growth_rate_fit([0.0, 1.0], [1.0, 2.0], window_fraction=0.0)


class TestParetoFit:
    def test_recovers_synthetic_tail(self):
        params = ParetoParams(2.0, 0.5)
        x = np.logspace(-1.0, 4.0, 2000)
        fit = pareto_fit_samples(x, pareto_cdf(x, params))
        assert fit.theta_hat == pytest.approx(0.5, rel=0.02)
        assert fit.k_hat == pytest.approx(2.0, rel=0.02)
        assert fit.is_pareto
        assert fit.x_end / fit.x_start == pytest.approx(10.0)

    def test_profile_on_uniform_grid(self):
        grid = UniformGrid(200.0, 20000)
        _, Phi = constant_alpha_bgp(0.075, ParetoParams(1.0, 0.3), grid)
        fit = pareto_fit(Phi, window=(5.0, 50.0))
        assert fit.theta_hat == pytest.approx(0.3, rel=0.02)
        assert fit.k_hat == pytest.approx(1.0, rel=0.02)

    def test_thin_tail_is_not_pareto(self):
        x = np.linspace(0.0, 10.0, 2001)
        fit = pareto_fit_samples(x, 1.0 - np.exp(-x))
        assert not fit.is_pareto

    def test_needs_samples_in_window(self):
        x = np.logspace(-1.0, 4.0, 2000)
        with pytest.raises(InvalidInputException):
            pareto_fit_samples(x, pareto_cdf(x, ParetoParams(2.0, 0.5)), window=(10.0, 10.01))

    def test_needs_tail_band(self):
        x = np.linspace(0.0, 1.0, 101)
        with pytest.raises(InvalidInputException):
            pareto_fit_samples(x, np.zeros_like(x))


class TestDegeneracy:
    def test_mass_at_origin(self):
        grid = UniformGrid(20.0, 1000)
        values = np.exp(-grid.nodes / 0.05)
        report = degeneracy_check(DensityProfile(grid, values).normalized())
        assert report.degenerate
        assert report.origin_mass > 0.9

    def test_spread_density(self):
        report = degeneracy_check(truncated_gaussian_density(UniformGrid(20.0, 1000)))
        assert not report.degenerate
        assert report.origin_mass < 1e-3

    @pytest.mark.parametrize("scale, degenerate", [(0.05, True), (3.0, False)])
    def test_flag_survives_grid_refinement(self, scale, degenerate):
        reports = []
        for n_cells in (1000, 2000):
            grid = UniformGrid(20.0, n_cells)
            values = np.exp(-grid.nodes / scale)
            reports.append(degeneracy_check(DensityProfile(grid, values).normalized()))
        assert [report.degenerate for report in reports] == [degenerate, degenerate]
        assert reports[0].origin_mass == pytest.approx(reports[1].origin_mass, abs=1e-3)


class TestFrontSpeed:
    @staticmethod
    def _fronts(c, sign=1.0):
        times = np.linspace(0.0, 100.0, 101)
        y = np.linspace(-20.0, 20.0, 801)
        G = 1.0 / (1.0 + np.exp(2.0 * (sign * y[None, :] - c * times[:, None])))
        return times, y, G

    def test_travelling_front(self):
        times, y, G = self._fronts(0.1)
        np.testing.assert_allclose(front_positions(y, G), 0.1 * times, atol=1e-3)
        assert front_speed_samples(times, y, G) == pytest.approx(0.1, rel=1e-3)

    def test_mirrored_front_moves_backwards(self):
        times, y, G = self._fronts(0.1, sign=-1.0)
        assert front_speed_samples(times, y, G) == pytest.approx(-0.1, rel=1e-3)

    def test_non_monotone_snapshot(self):
        times, y, G = self._fronts(0.1)
        G[3, 400] = 2.0
        with pytest.raises(InvalidInputException):
            front_positions(y, G)


class TestProductionSeries:
    def test_td_trace(self, coarse_grid, power_law):
        cfg = TdConfig(grid=coarse_grid, tau=0.5, T=2.0, nu=0.0, r=0.05, lf=power_law,
                       max_outer=5)
        trace = run_td(cfg, truncated_gaussian_density(coarse_grid))
        Y = production_series(trace)
        assert Y.shape == trace.step_times.shape
        expected = np.sum((1.0 - trace.S[0]) * trace.f[0] * coarse_grid.nodes
                          * coarse_grid.weights)
        assert Y[0] == pytest.approx(expected, rel=1e-12)
        assert np.all(Y >= 0.0)

    def test_rejects_other_inputs(self):
        with pytest.raises(InvalidInputException):
            production_series(np.ones(3))
