"""Scenario and sweep configuration.

Config files are YAML with four optional sections::

    model:   {beta, nu, population, initial_infected | initial_infected_fraction,
              initial_susceptible}
    control: {alpha, horizon_T}
    solver:  {method, dt, tol_t, trisection_k, gradient_tol, max_iters}
    output:  {dir}
    sweep:   {axis, values | range: {start, stop, num}}

Missing keys fall back to the Table 2 scenario. Command-line flags override
file values, which override defaults.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .sir_core import (
    DEFAULT_DT,
    TABLE2_ALPHA_LOCK,
    TABLE2_BETA,
    TABLE2_INFECTED,
    TABLE2_NU,
    TABLE2_POPULATION,
    EpidemicParams,
    EpidemicState,
)

SOLVERS = ("psi-root", "trisection", "gradient", "alpha-zero")
SWEEP_AXES = ("T", "alpha", "R0", "t0")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ScenarioConfig:
    beta: float = TABLE2_BETA
    nu: float = TABLE2_NU
    population: float = TABLE2_POPULATION
    initial_infected: float | None = TABLE2_INFECTED
    initial_infected_fraction: float | None = None
    initial_susceptible: float | None = None
    alpha: float = TABLE2_ALPHA_LOCK
    horizon_T: float = 100.0
    dt: float = DEFAULT_DT
    solver: str = "psi-root"
    tol_t: float = 1e-3
    trisection_k: int = 60
    gradient_tol: float = 1e-9
    max_iters: int = 5000
    out_dir: str = "out"

    def params(self) -> EpidemicParams:
        return EpidemicParams(self.beta, self.nu)

    def initial_state(self) -> EpidemicState:
        if self.initial_infected_fraction is not None:
            i = self.initial_infected_fraction
            s = 1.0 - i if self.initial_susceptible is None else self.initial_susceptible / self.population
            return EpidemicState.from_fractions(s, i)
        return EpidemicState.from_counts(
            self.population, self.initial_infected, self.initial_susceptible
        )

    def validate(self) -> "ScenarioConfig":
        """Check every solver precondition up front; returns self."""
        _positive("model.beta", self.beta)
        _positive("model.nu", self.nu)
        if self.beta <= self.nu:
            raise ConfigError("model.beta", f"beta/nu = {self.beta / self.nu:.6g} must exceed 1")
        _positive("model.population", self.population)
        if (self.initial_infected is None) == (self.initial_infected_fraction is None):
            raise ConfigError(
                "model.initial_infected",
                "give exactly one of initial_infected (count) or initial_infected_fraction",
            )
        if self.initial_infected is not None:
            if not 0 < self.initial_infected < self.population:
                raise ConfigError(
                    "model.initial_infected", "must be a positive count below the population"
                )
        else:
            if not 0 < self.initial_infected_fraction < 1:
                raise ConfigError("model.initial_infected_fraction", "must lie in (0, 1)")
        try:
            self.initial_state()
        except ValueError as exc:
            raise ConfigError("model.initial_susceptible", str(exc)) from None
        if not 0.0 <= self.alpha < 1.0:
            raise ConfigError("control.alpha", f"must lie in [0, 1), got {self.alpha}")
        _positive("control.horizon_T", self.horizon_T)
        _positive("solver.dt", self.dt)
        n = round(2 * self.horizon_T / self.dt)
        if abs(n * self.dt - 2 * self.horizon_T) > 1e-9 * max(1.0, self.horizon_T):
            raise ConfigError("solver.dt", "horizon_T must be a multiple of dt")
        if self.solver not in SOLVERS:
            raise ConfigError("solver.method", f"must be one of {', '.join(SOLVERS)}")
        if self.solver == "alpha-zero" and self.alpha != 0.0:
            raise ConfigError("solver.method", "alpha-zero requires control.alpha = 0")
        _positive("solver.tol_t", self.tol_t)
        _positive("solver.gradient_tol", self.gradient_tol)
        if self.trisection_k < 1:
            raise ConfigError("solver.trisection_k", "must be at least 1")
        if self.max_iters < 1:
            raise ConfigError("solver.max_iters", "must be at least 1")
        return self


@dataclass(frozen=True)
class SweepConfig:
    axis: str
    values: tuple
    fixed: ScenarioConfig = field(default_factory=ScenarioConfig)

    def validate(self) -> "SweepConfig":
        if self.axis not in SWEEP_AXES:
            raise ConfigError("sweep.axis", f"must be one of {', '.join(SWEEP_AXES)}")
        if not self.values:
            raise ConfigError("sweep.values", "must not be empty")
        self.fixed.validate()
        for v in self.values:
            if not math.isfinite(v):
                raise ConfigError("sweep.values", f"non-finite value {v}")
            if self.axis == "T" and not v > 0:
                raise ConfigError("sweep.values", f"horizons must be positive, got {v}")
            if self.axis == "alpha" and not 0.0 <= v < 1.0:
                raise ConfigError("sweep.values", f"alpha must lie in [0, 1), got {v}")
            if self.axis == "R0" and not v > 1.0:
                raise ConfigError("sweep.values", f"R0 must exceed 1, got {v}")
            if self.axis == "t0" and not 0.0 <= v <= self.fixed.horizon_T:
                raise ConfigError("sweep.values", f"switch time {v} outside [0, T]")
        return self


def _positive(name: str, value):
    if value is None or not (value > 0 and math.isfinite(value)):
        raise ConfigError(name, f"must be a positive finite number, got {value!r}")


_SECTIONS = {
    "model": {
        "beta": "beta",
        "nu": "nu",
        "population": "population",
        "initial_infected": "initial_infected",
        "initial_infected_fraction": "initial_infected_fraction",
        "initial_susceptible": "initial_susceptible",
    },
    "control": {"alpha": "alpha", "horizon_T": "horizon_T", "T": "horizon_T"},
    "solver": {
        "method": "solver",
        "dt": "dt",
        "tol_t": "tol_t",
        "trisection_k": "trisection_k",
        "gradient_tol": "gradient_tol",
        "max_iters": "max_iters",
    },
    "output": {"dir": "out_dir"},
}
_INT_FIELDS = {"trisection_k", "max_iters"}
_STR_FIELDS = {"solver", "out_dir"}


def _coerce(name: str, key: str, value: Any):
    if value is None:
        return None
    if name in _STR_FIELDS:
        return str(value)
    try:
        # PyYAML reads 6.7e7 (no sign in the exponent) as a string.
        return int(value) if name in _INT_FIELDS else float(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected a number, got {value!r}") from None


def scenario_from_mapping(data: dict, base: ScenarioConfig | None = None) -> ScenarioConfig:
    base = base or ScenarioConfig()
    updates = {}
    for section, keys in _SECTIONS.items():
        block = data.get(section) or {}
        if not isinstance(block, dict):
            raise ConfigError(section, "must be a mapping")
        for key, value in block.items():
            if key not in keys:
                raise ConfigError(f"{section}.{key}", "unknown key")
            name = keys[key]
            updates[name] = _coerce(name, f"{section}.{key}", value)
    if "initial_infected_fraction" in updates and "initial_infected" not in updates:
        updates["initial_infected"] = None
    unknown = set(data) - set(_SECTIONS) - {"sweep"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown section")
    return replace(base, **updates)


def sweep_from_mapping(data: dict, fixed: ScenarioConfig) -> SweepConfig:
    block = data.get("sweep")
    if not isinstance(block, dict):
        raise ConfigError("sweep", "missing sweep section")
    axis = str(block.get("axis", ""))
    if "values" in block:
        values = block["values"]
        if not isinstance(values, list):
            raise ConfigError("sweep.values", "must be a list")
        values = tuple(_coerce("values", "sweep.values", v) for v in values)
    elif "range" in block:
        rng = block["range"] or {}
        try:
            start, stop, num = float(rng["start"]), float(rng["stop"]), int(rng["num"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("sweep.range", "needs numeric start, stop and num") from None
        values = tuple(float(v) for v in np.linspace(start, stop, num))
    else:
        raise ConfigError("sweep.values", "give values or range")
    return SweepConfig(axis, values, fixed)


def load_mapping(path: str | Path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"invalid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be a mapping")
    return data


def with_overrides(config: ScenarioConfig, overrides: dict) -> ScenarioConfig:
    """Replace fields named in ``overrides``; None values and unknown keys are ignored."""
    names = {f.name for f in fields(ScenarioConfig)}
    return replace(config, **{k: v for k, v in overrides.items() if k in names and v is not None})
