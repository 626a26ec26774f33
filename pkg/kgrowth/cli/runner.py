"""
Run orchestration and artifact writers for the batch front end
"""

import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, Sequence, Tuple

import numpy as np

from ..config import Tolerances
from ..core.grid import UniformGrid
from ..core.learning import ConstantLearning, LearningFunction, LearningLaw
from ..core.profiles import PolicyProfile, cdf_from_density, truncated_gaussian_density
from ..diagnostics import (
    degeneracy_check, front_positions, front_speed, growth_rate_fit, pareto_fit
)
from ..interfaces import (
    InvalidInputException, InvariantReport, KnowledgeGrowthException, RunMode, SolverException
)
from ..solvers.analytic import (
    ParetoParams, constant_alpha_bgp, constant_alpha_density, kpp_wave_speed
)
from ..solvers.bgp_solver import BgpConfig, run_bgp
from ..solvers.ktransform import (
    check_k_bounds, gamma_from_k, phi_from_k, policy_to_ktilde, solve_k
)
from ..solvers.td_solver import KppConfig, TdConfig, kpp_run, run_td
from .models import RunSpec

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SOLVER_ERROR = 1
EXIT_NOT_CONVERGED = 2
EXIT_INVALID = 3

RunResult = Tuple[int, Dict[str, Any]]


def _clean(value: Any) -> Any:
    """Make a report JSON-safe: numpy scalars to Python, non-finite floats to None"""
    if isinstance(value, dict):
        return {str(key): _clean(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(item) for item in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value) if math.isfinite(value) else None
    return value


def write_csv(path: Path, header: Sequence[str], columns: Sequence[np.ndarray]) -> None:
    np.savetxt(path, np.column_stack(columns), fmt="%.17g", delimiter=",",
               header=",".join(header), comments="")


def write_report(path: Path, report: Dict[str, Any]) -> None:
    path.write_text(json.dumps(_clean(report), sort_keys=True, indent=2) + "\n")


def build_grid(spec: RunSpec) -> UniformGrid:
    return UniformGrid(spec.x_max, spec.n_cells)


def build_law(spec: RunSpec) -> LearningLaw:
    if spec.constant_alpha:
        return ConstantLearning(spec.alpha0)
    return LearningFunction(spec.alpha0, spec.n_exp)


def build_tolerances(spec: RunSpec) -> Tolerances:
    return Tolerances(num_tol=spec.num_tol, mass_tol=spec.mass_tol)


def _try_pareto(cdf) -> Dict[str, Any]:
    try:
        return pareto_fit(cdf).to_dict()
    except InvalidInputException as e:
        return {"error": str(e)}


def run_td_mode(spec: RunSpec, out: Path) -> RunResult:
    grid = build_grid(spec)
    tolerances = build_tolerances(spec)
    cfg = TdConfig(
        grid=grid, tau=spec.tau, T=spec.T, nu=spec.nu, r=spec.r, lf=build_law(spec),
        outer_tol=spec.outer_tol, max_outer=spec.max_outer,
        omega=spec.omega if spec.omega is not None else 1.0,
        snapshot_every=spec.snapshot_every, tolerances=tolerances,
    )
    f0 = truncated_gaussian_density(grid, spec.f0_mean, spec.f0_std)
    trace = run_td(cfg, f0)

    for i, t in enumerate(trace.times):
        write_csv(out / f"profiles_{t:g}.csv", ["x", "f", "V", "S"],
                  [grid.nodes, trace.f[i], trace.V[i], trace.S[i]])
    write_csv(out / "series.csv", ["t", "Y", "mass"],
              [trace.step_times, trace.production, trace.mass])

    invariants = InvariantReport("td_trace")
    snapshot_mass = trace.f @ grid.weights
    defect = float(np.max(np.abs(snapshot_mass - 1.0)))
    invariants.add("mass", defect <= tolerances.mass_tol, defect)
    invariants.add("non_negative", trace.min_density >= -1e-12, trace.min_density)
    rise = float(np.max(np.diff(trace.S, axis=1), initial=0.0))
    invariants.add("policy_non_increasing", rise <= tolerances.num_tol, rise)
    invariants.add("production_non_negative", float(trace.production.min()) >= 0.0,
                   float(trace.production.min()))

    report = {
        **trace.summary(),
        "growth": growth_rate_fit(trace.step_times, trace.production).to_dict(),
        "degeneracy": degeneracy_check(trace).to_dict(),
        "pareto": _try_pareto(cdf_from_density(trace.snapshot(-1)[0])),
        "invariants": invariants.to_dict(),
    }
    return (EXIT_OK if trace.converged else EXIT_NOT_CONVERGED), report


def _bgp_config(spec: RunSpec) -> BgpConfig:
    return BgpConfig(
        grid=build_grid(spec), nu=spec.nu, r=spec.r, lf=build_law(spec),
        theta=spec.theta if spec.nu == 0 else None,
        omega=spec.omega if spec.omega is not None else 0.75,
        tol=spec.tol, max_iters=spec.max_iters, eps_hjb=spec.eps_hjb,
        tolerances=build_tolerances(spec),
    )


def run_bgp_mode(spec: RunSpec, out: Path) -> RunResult:
    cfg = _bgp_config(spec)
    solution = run_bgp(cfg)
    x = cfg.grid.nodes
    write_csv(out / "profiles.csv", ["x", "phi", "v", "S"],
              [x, solution.phi.values, solution.v.values, solution.S.values])
    history = solution.history
    write_csv(out / "history.csv", ["iteration", "change", "gamma"],
              [np.array([h[key] for h in history]) for key in ("iteration", "change", "gamma")])

    report = {
        **solution.to_dict(),
        "invariants": solution.invariant_report(cfg).to_dict(),
        "degeneracy": degeneracy_check(solution).to_dict(),
        "pareto": _try_pareto(solution.cdf),
    }
    ok = solution.converged or solution.degenerate
    return (EXIT_OK if ok else EXIT_NOT_CONVERGED), report


def run_analytic_mode(spec: RunSpec, out: Path) -> RunResult:
    grid = build_grid(spec)
    params = ParetoParams(spec.k, spec.theta)
    gamma, Phi = constant_alpha_bgp(spec.alpha0, params, grid)
    phi = constant_alpha_density(spec.alpha0, params, grid)
    write_csv(out / "profiles.csv", ["x", "Phi", "phi"], [grid.nodes, Phi.values, phi.values])
    report = {
        "gamma": gamma,
        "kpp_wave_speed": kpp_wave_speed(spec.nu, spec.alpha0),
        "invariants": {"cdf": Phi.check_invariants(build_tolerances(spec))},
    }
    return EXIT_OK, report


def run_ktransform_mode(spec: RunSpec, out: Path) -> RunResult:
    lf = build_law(spec)
    k_grid = UniformGrid(spec.kt_max, spec.kt_cells)
    report: Dict[str, Any] = {"policy": spec.k_policy}
    if spec.k_policy == "bgp":
        solution = run_bgp(_bgp_config(spec))
        report["bgp"] = solution.to_dict()
        S_tilde = policy_to_ktilde(solution.S, k_grid, spec.theta)
    else:
        S_tilde = PolicyProfile.constant(k_grid, 1.0)

    kp = solve_k(spec.k_tilde, S_tilde, spec.theta, lf)
    gamma = gamma_from_k(kp)
    Phi = phi_from_k(kp, gamma, build_grid(spec))
    write_csv(out / "k_profile.csv", ["xt", "K", "I", "S"],
              [k_grid.nodes, kp.values, kp.running_integral, S_tilde.values])
    write_csv(out / "tail.csv", ["xt", "xtK"], [kp.tail_x, kp.tail_xk])
    write_csv(out / "profiles.csv", ["x", "Phi"], [Phi.x, Phi.values])
    report.update({
        "gamma": gamma,
        "k": kp.pareto_coefficient(gamma),
        "limit": kp.limit,
        "x0_tilde": kp.x0_tilde,
        "running_integral_defect": abs(1.0 - kp.tail_integral),
        "invariants": check_k_bounds(kp, gamma).to_dict(),
    })
    return EXIT_OK, report


def run_kpp_mode(spec: RunSpec, out: Path) -> RunResult:
    grid = UniformGrid(spec.y_max, spec.y_cells, x_min=spec.y_min)
    cfg = KppConfig(nu=spec.nu, alpha0=spec.alpha0, grid=grid, tau=spec.tau, T=spec.T,
                    snapshot_every=spec.snapshot_every)
    G0 = (grid.nodes < 0.0).astype(float)
    trace = kpp_run(cfg, G0)
    write_csv(out / "series.csv", ["t", "front"],
              [trace.times, front_positions(grid.nodes, trace.G)])
    write_csv(out / "profile_final.csv", ["y", "G"], [grid.nodes, trace.G[-1]])

    speed = front_speed(trace)
    oracle = kpp_wave_speed(spec.nu, spec.alpha0)
    report = {
        "front_speed": speed,
        "oracle_speed": oracle,
        "relative_error": abs(speed - oracle) / oracle if oracle > 0 else None,
        "warnings": trace.warnings,
    }
    return EXIT_OK, report


def _sweep_cell(payload: Dict[str, Any]) -> Dict[str, Any]:
    spec = RunSpec(**payload)
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    code, report = run_bgp_mode(spec, out)
    write_report(out / "report.json", {"config": spec.resolved(), "exit_code": code, **report})
    return {
        "exit_code": code,
        "gamma": report["gamma"],
        "x0": report["x0"],
        "x0_resolved": report["x0_resolved"],
        "Y0": report["production"],
        "converged": report["converged"],
        "degenerate": report["degenerate"],
    }


def _sweep_workers(cells: int) -> int:
    threads = int(os.environ.get("KG_THREADS", "0") or 0) or os.cpu_count() or 1
    return max(1, min(cells, threads))


def run_sweep_mode(spec: RunSpec, out: Path) -> RunResult:
    axis = spec.sweep_axis
    values = sorted(spec.sweep_values)
    payloads = []
    for value in values:
        cell = spec.resolved()
        cell.update({axis: value, "mode": RunMode.BGP.value,
                     "out": str(out / f"{axis}_{value:g}"), "sweep_values": []})
        payloads.append(cell)

    workers = _sweep_workers(len(payloads))
    logger.info(f"Running {len(payloads)} sweep cells over {axis} with {workers} workers")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        cells = list(pool.map(_sweep_cell, payloads))

    gammas = np.array([cell["gamma"] for cell in cells])
    x0s = np.array([cell["x0"] for cell in cells])
    # a threshold inside the first cell is only known to grid resolution
    slack = 0.0 if all(cell["x0_resolved"] for cell in cells) else build_grid(spec).h
    write_csv(out / "series.csv", [axis, "gamma", "x0", "Y0"],
              [np.array(values), gammas, x0s, np.array([cell["Y0"] for cell in cells])])

    report = {
        "axis": axis,
        "cells": [{axis: value, **cell} for value, cell in zip(values, cells)],
        "gamma_increasing": bool(np.all(np.diff(gammas) > 0)),
        "x0_non_increasing": bool(np.all(np.diff(x0s) <= slack)),
    }
    failed = any(cell["exit_code"] != EXIT_OK for cell in cells)
    return (EXIT_NOT_CONVERGED if failed else EXIT_OK), report


MODE_RUNNERS: Dict[RunMode, Callable[[RunSpec, Path], RunResult]] = {
    RunMode.TD: run_td_mode,
    RunMode.BGP: run_bgp_mode,
    RunMode.ANALYTIC: run_analytic_mode,
    RunMode.KTRANSFORM: run_ktransform_mode,
    RunMode.KPP: run_kpp_mode,
    RunMode.SWEEP: run_sweep_mode,
}


def execute(spec: RunSpec) -> int:
    """Run the selected mode, write artifacts and report.json, return the exit code"""
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    header: Dict[str, Any] = {"config": spec.resolved(), "mode": spec.mode.value}
    try:
        code, report = MODE_RUNNERS[spec.mode](spec, out)
    except InvalidInputException as e:
        logger.error(f"Invalid input: {e}")
        write_report(out / "report.json", {**header, "exit_code": EXIT_INVALID, "error": str(e)})
        return EXIT_INVALID
    except KnowledgeGrowthException as e:
        logger.error(f"{type(e).__name__}: {e}")
        record: Dict[str, Any] = {"type": type(e).__name__, "message": str(e)}
        if isinstance(e, SolverException):
            record["dump"] = e.dump
        if getattr(e, "position", None) is not None:
            record["position"] = e.position
        write_report(out / "report.json",
                     {**header, "exit_code": EXIT_SOLVER_ERROR, "error": record})
        return EXIT_SOLVER_ERROR
    except Exception as e:
        logger.exception(f"Unexpected failure in {spec.mode.value} run: {e}")
        record = {"type": type(e).__name__, "message": str(e)}
        write_report(out / "report.json",
                     {**header, "exit_code": EXIT_SOLVER_ERROR, "error": record})
        return EXIT_SOLVER_ERROR

    write_report(out / "report.json", {**header, "exit_code": code, **report})
    logger.info(f"Run finished with exit code {code}; artifacts in {out}")
    return code
