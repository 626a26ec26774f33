import json

import numpy as np
import pytest

from kgrowth.cli import main, parse_config
from kgrowth.cli import runner
from kgrowth.cli.main import parse_overrides
from kgrowth.interfaces import ConfigValidationException, RunMode, SolverException


def _report(out):
    return json.loads((out / "report.json").read_text())


class TestParseConfig:
    def test_overrides_win_over_file(self, tmp_path):
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"nu": 0.005, "alpha0": 0.1, "theta": 0.3}))
        spec = parse_config(str(config), {"mode": "bgp", "out": str(tmp_path), "nu": 0.0})
        assert spec.mode is RunMode.BGP
        assert spec.nu == 0.0 and spec.alpha0 == 0.1

    def test_collects_every_violation(self, tmp_path):
        with pytest.raises(ConfigValidationException) as info:
            parse_config(None, {"mode": "bgp", "out": str(tmp_path), "r": -1.0, "omega": 2.0,
                                "bogus": 1})
        errors = info.value.errors
        assert any(e.startswith("bogus") for e in errors)
        assert any(e.startswith("r:") for e in errors)
        assert any(e.startswith("omega:") for e in errors)
        assert any(e.startswith("theta:") for e in errors)

    def test_type_errors_do_not_hide_mode_rules(self, tmp_path):
        with pytest.raises(ConfigValidationException) as info:
            parse_config(None, {"mode": "bgp", "out": str(tmp_path), "n_cells": "many",
                                "r": -1.0})
        errors = info.value.errors
        assert any(e.startswith("n_cells") for e in errors)
        assert "r: must be positive" in errors
        assert "theta: required for bgp runs with nu = 0" in errors
        assert not any(e.startswith("n_cells: must be") for e in errors)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigValidationException):
            parse_config(str(tmp_path / "absent.json"), {"mode": "td", "out": str(tmp_path)})

    def test_sweep_values_from_text(self, tmp_path):
        spec = parse_config(None, {"mode": "sweep", "out": str(tmp_path),
                                   "sweep_values": "0.01, 0.05,0.1"})
        assert spec.sweep_values == [0.01, 0.05, 0.1]

    def test_kpp_reaction_guard(self, tmp_path):
        with pytest.raises(ConfigValidationException):
            parse_config(None, {"mode": "kpp", "out": str(tmp_path), "tau": 4.0, "T": 400.0})


class TestOverrides:
    def test_forms(self):
        overrides = parse_overrides(["--theta=0.3", "--constant_alpha", "true", "--label=abc"])
        assert overrides == {"theta": 0.3, "constant_alpha": True, "label": "abc"}

    def test_dangling_key(self):
        with pytest.raises(ConfigValidationException):
            parse_overrides(["--theta"])


class TestMain:
    def test_analytic(self, tmp_path):
        out = tmp_path / "analytic"
        code = main(["analytic", "--out", str(out), "--theta=0.3", "--n_cells=200",
                     "--nu=0.005", "--plain-logs"])
        assert code == 0
        report = _report(out)
        assert report["gamma"] == pytest.approx(0.0225)
        assert report["kpp_wave_speed"] == pytest.approx(0.0387298, rel=1e-6)
        assert report["config"]["theta"] == 0.3
        data = np.loadtxt(out / "profiles.csv", delimiter=",", skiprows=1)
        assert data.shape == (201, 3)
        assert (out / "profiles.csv").read_text().splitlines()[0] == "x,Phi,phi"

    def test_invalid_config_exit_code(self, tmp_path, capsys):
        code = main(["bgp", "--out", str(tmp_path / "bad"), "--nu=0"])
        assert code == 3
        assert "theta" in capsys.readouterr().err

    def test_td_run_writes_series_and_profiles(self, tmp_path):
        out = tmp_path / "td"
        code = main(["td", "--out", str(out), "--n_cells=100", "--tau=0.5", "--T=2",
                     "--nu=0.005", "--max_outer=50"])
        assert code in (0, 2)
        report = _report(out)
        assert report["exit_code"] == code
        assert {"growth", "degeneracy", "pareto", "invariants"} <= set(report)
        assert report["invariants"]["outcomes"][0]["name"] == "mass"
        assert (out / "profiles_0.csv").exists() and (out / "profiles_2.csv").exists()
        series = np.loadtxt(out / "series.csv", delimiter=",", skiprows=1)
        assert series.shape == (5, 3)

    def test_non_convergence_exit_code(self, tmp_path):
        out = tmp_path / "td"
        code = main(["td", "--out", str(out), "--n_cells=100", "--tau=0.5", "--T=2",
                     "--max_outer=1", "--outer_tol=1e-14"])
        assert code == 2
        assert not _report(out)["converged"]

    def test_ktransform(self, tmp_path):
        out = tmp_path / "kt"
        code = main(["ktransform", "--out", str(out), "--theta=0.3",
                     "--n_cells=200"])
        assert code == 0
        report = _report(out)
        assert report["gamma"] == pytest.approx(0.0225, rel=1e-3)
        assert report["invariants"]["all_passed"]
        assert (out / "k_profile.csv").exists() and (out / "tail.csv").exists()

    def test_kpp(self, tmp_path):
        out = tmp_path / "kpp"
        code = main(["kpp", "--out", str(out), "--nu=0.005", "--y_max=10", "--y_cells=300",
                     "--T=20", "--tau=0.25"])
        assert code == 0
        report = _report(out)
        assert report["front_speed"] > 0
        series = np.loadtxt(out / "series.csv", delimiter=",", skiprows=1)
        assert series.shape[1] == 2

    def test_solver_error_exit_code(self, tmp_path, monkeypatch):
        def broken(cfg):
            raise SolverException("singular density system", {"iteration": 3})

        monkeypatch.setattr(runner, "run_bgp", broken)
        out = tmp_path / "bgp"
        code = main(["bgp", "--out", str(out), "--theta=0.3", "--n_cells=100"])
        assert code == 1
        error = _report(out)["error"]
        assert error["type"] == "SolverException"
        assert error["dump"] == {"iteration": 3}

    def test_unexpected_failure_still_writes_report(self, tmp_path, monkeypatch):
        def broken(cfg):
            raise ValueError("operands could not be broadcast together")

        monkeypatch.setattr(runner, "run_bgp", broken)
        out = tmp_path / "bgp"
        code = main(["bgp", "--out", str(out), "--theta=0.3", "--n_cells=100"])
        assert code == 1
        report = _report(out)
        assert report["exit_code"] == 1
        assert report["error"] == {"type": "ValueError",
                                   "message": "operands could not be broadcast together"}

    def test_repeated_runs_write_identical_artifacts(self, tmp_path):
        args = ["bgp", "--theta=0.5", "--n_cells=100", "--max_iters=20"]
        first, second = tmp_path / "first", tmp_path / "second"
        assert main([*args, "--out", str(first)]) == main([*args, "--out", str(second)])
        for name in ("profiles.csv", "history.csv"):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_sweep(self, tmp_path, monkeypatch):
        monkeypatch.setenv("KG_THREADS", "1")
        out = tmp_path / "sweep"
        code = main(["sweep", "--out", str(out), "--sweep_axis=r", "--sweep_values=0.05,0.1",
                     "--theta=0.5", "--n_cells=100", "--max_iters=20"])
        assert code in (0, 2)
        assert (out / "r_0.05" / "report.json").exists()
        assert (out / "r_0.1" / "profiles.csv").exists()
        series = np.loadtxt(out / "series.csv", delimiter=",", skiprows=1)
        np.testing.assert_allclose(series[:, 0], [0.05, 0.1])
        assert len(_report(out)["cells"]) == 2
