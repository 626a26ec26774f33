"""
Run specification for the batch front end
"""

import json
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional

from pydantic import (
    BaseModel, ConfigDict, TypeAdapter, ValidationError, field_validator, model_validator
)

from ..interfaces import ConfigValidationException, RunMode

SWEEP_AXES = ("nu", "r", "alpha0", "n_exp", "theta", "omega")


def _split_values(value: Any) -> Any:
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class RunSpec(BaseModel):
    """Resolved configuration of one batch run"""
    model_config = ConfigDict(extra="forbid", use_enum_values=False)

    mode: RunMode
    out: str

    # knowledge grid
    x_max: float = 20.0
    n_cells: int = 1000

    # model
    alpha0: float = 0.075
    n_exp: float = 0.3
    constant_alpha: bool = False
    r: float = 0.05
    nu: float = 0.0
    theta: Optional[float] = None
    k: float = 1.0

    # time-dependent runs
    tau: float = 0.05
    T: float = 100.0
    outer_tol: float = 1e-6
    max_outer: int = 200
    omega: Optional[float] = None
    snapshot_every: Optional[int] = None
    f0_mean: float = 5.0
    f0_std: float = 1.0

    # growth path
    tol: float = 1e-8
    max_iters: int = 5000
    eps_hjb: float = 0.0

    # tail transform
    k_tilde: float = 1.0
    kt_max: float = 10.0
    kt_cells: int = 10000
    k_policy: Literal["saturated", "bgp"] = "saturated"

    # Fisher-KPP
    y_min: float = -5.0
    y_max: float = 45.0
    y_cells: int = 2000

    # sweeps
    sweep_axis: str = "nu"
    sweep_values: List[float] = []

    # invariant tolerances
    num_tol: float = 1e-9
    mass_tol: float = 1e-8

    @field_validator("sweep_values", mode="before")
    @classmethod
    def split_values(cls, value: Any) -> Any:
        return _split_values(value)

    @model_validator(mode="after")
    def check_mode_requirements(self) -> "RunSpec":
        errors = requirement_errors(dict(self))
        if errors:
            raise ValueError("; ".join(errors))
        return self

    def resolved(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def requirement_errors(values: Mapping[str, Any]) -> List[str]:
    """Cross-field and per-mode constraints over the fields present in `values`.

    A field missing from `values` failed its own type check; every rule that
    reads it is skipped.
    """
    errors: List[str] = []

    def have(*names: str) -> bool:
        return all(name in values for name in names)

    positive = ["x_max", "alpha0", "r", "tau", "T", "outer_tol", "tol", "k", "k_tilde",
                "kt_max", "num_tol", "mass_tol"]
    for name in positive:
        if have(name) and not values[name] > 0:
            errors.append(f"{name}: must be positive")
    for name in ("n_cells", "kt_cells", "y_cells"):
        if have(name) and values[name] < 2:
            errors.append(f"{name}: must be at least 2")
    if have("nu") and values["nu"] < 0:
        errors.append("nu: must be non-negative")
    if have("eps_hjb") and values["eps_hjb"] < 0:
        errors.append("eps_hjb: must be non-negative")
    if have("constant_alpha", "n_exp") and not values["constant_alpha"] \
            and not 0.0 < values["n_exp"] < 1.0:
        errors.append("n_exp: must lie in (0, 1)")
    theta = values.get("theta")
    if theta is not None and not 0.0 < theta < 1.0:
        errors.append("theta: must lie in (0, 1)")
    omega = values.get("omega")
    if omega is not None and not 0.0 < omega <= 1.0:
        errors.append("omega: must lie in (0, 1]")

    mode = values.get("mode")
    if mode == RunMode.BGP and have("nu", "theta"):
        if values["nu"] == 0 and theta is None:
            errors.append("theta: required for bgp runs with nu = 0")
        if values["nu"] > 0 and theta is not None:
            errors.append("theta: not used for bgp runs with nu > 0")
    if mode in (RunMode.ANALYTIC, RunMode.KTRANSFORM) and have("theta") and theta is None:
        errors.append(f"theta: required for {mode.value} runs")
    if mode == RunMode.KTRANSFORM and have("k_policy", "nu") and values["k_policy"] == "bgp" \
            and values["nu"] != 0:
        errors.append("nu: the tail transform applies to runs without diffusion")
    if mode == RunMode.KPP:
        if have("y_min", "y_max") and values["y_max"] <= values["y_min"]:
            errors.append("y_max: must exceed y_min")
        if have("tau", "alpha0") and values["tau"] * values["alpha0"] > 0.25:
            errors.append("tau: tau * alpha0 must not exceed 0.25 for kpp runs")
    if mode in (RunMode.TD, RunMode.KPP) and have("T", "tau") and values["tau"] > 0:
        steps = round(values["T"] / values["tau"])
        if steps < 1 or abs(steps * values["tau"] - values["T"]) > 1e-9 * abs(values["T"]):
            errors.append("T: must be a positive multiple of tau")
    if mode == RunMode.SWEEP and have("sweep_axis", "sweep_values", "nu", "theta"):
        axis = values["sweep_axis"]
        if axis not in SWEEP_AXES:
            errors.append(f"sweep_axis: must be one of {', '.join(SWEEP_AXES)}")
        if not values["sweep_values"]:
            errors.append("sweep_values: at least one value is required")
        nus = values["sweep_values"] if axis == "nu" else [values["nu"]]
        if any(nu == 0 for nu in nus) and theta is None:
            errors.append("theta: required for sweep cells with nu = 0")
        if any(nu > 0 for nu in nus) and theta is not None:
            errors.append("theta: not used for sweep cells with nu > 0")

    if have("out"):
        out = Path(values["out"])
        target = out if out.exists() else out.parent
        if out.exists() and not out.is_dir():
            errors.append(f"out: {out} is not a directory")
        elif not target.exists() or not os.access(target, os.W_OK):
            errors.append(f"out: {out} is not writable")
    return errors


def _valid_fields(merged: Mapping[str, Any], error: ValidationError) -> Dict[str, Any]:
    """Fields of `merged` (defaults filled in) that pass their own type checks"""
    failed = {item["loc"][0] for item in error.errors() if item["loc"]}
    values: Dict[str, Any] = {}
    for name, info in RunSpec.model_fields.items():
        if name in failed:
            continue
        if name not in merged:
            if info.is_required():
                continue
            values[name] = info.get_default(call_default_factory=True)
            continue
        raw = merged[name]
        if name == "sweep_values":
            raw = _split_values(raw)
        try:
            values[name] = TypeAdapter(info.annotation).validate_python(raw)
        except ValidationError:
            continue
    return values


def _format_errors(error: ValidationError) -> List[str]:
    messages = []
    for item in error.errors():
        loc = ".".join(str(part) for part in item["loc"])
        msg = item["msg"]
        if msg.startswith("Value error, "):
            messages.extend(msg[len("Value error, "):].split("; "))
        elif item["type"] == "extra_forbidden":
            messages.append(f"{loc}: unknown key")
        else:
            messages.append(f"{loc}: {msg}" if loc else msg)
    return messages


def parse_config(path: Optional[str], overrides: Mapping[str, Any]) -> RunSpec:
    """Merge a JSON config file with overrides (overrides win) and validate"""
    data: Dict[str, Any] = {}
    if path is not None:
        config_path = Path(path)
        if not config_path.is_file():
            raise ConfigValidationException([f"config: file not found: {path}"])
        try:
            data = json.loads(config_path.read_text() or "{}")
        except json.JSONDecodeError as e:
            raise ConfigValidationException([f"config: invalid JSON ({e})"]) from e
        if not isinstance(data, dict):
            raise ConfigValidationException(["config: top level must be an object"])

    merged = {**data, **{key.replace("-", "_"): value for key, value in overrides.items()}}
    try:
        return RunSpec(**merged)
    except ValidationError as e:
        messages = _format_errors(e)
        # a field that fails its type check stops the model validator, so the
        # cross-field rules are rerun here over the fields that did parse
        if any(item["loc"] for item in e.errors()):
            extra = requirement_errors(_valid_fields(merged, e))
            messages.extend(m for m in extra if m not in messages)
        raise ConfigValidationException(messages) from e
