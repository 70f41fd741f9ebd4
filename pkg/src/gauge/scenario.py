"""
Scenario files: one JSON document naming an equation, an optional gauge
element, a grid, initial data and run parameters.

Example::

    {
      "equation": {"form": "doebner-goldin", "coefficients": {"D": 0.1}},
      "grid": {"L": 40, "N": 256},
      "initial": {"S": "0", "T": "ln(1 + 0.5*exp(-x^2/4))"},
      "run": {"t0": 0, "t1": 1, "dt": 0.001}
    }
"""

import json
import logging
from pathlib import Path
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .config import settings
from .equation_model import (
    ABCoefficients,
    Grid,
    NuMuCoefficients,
    PhysicalParams,
    STField,
    ab_from_numu,
    doebner_goldin_numu,
    linear_schroedinger_ab,
    numu_from_ab,
)
from .errors import GaugeFamilyError, ScenarioError
from .gauge_group import GaugeElement

logger = logging.getLogger(__name__)


def _located(exc: ValidationError, prefix: str = "") -> ScenarioError:
    """First pydantic error as a ScenarioError with a dotted path."""
    error = exc.errors()[0]
    parts = [prefix] if prefix else []
    parts += [str(p) for p in error["loc"]]
    return ScenarioError(error["msg"], path=".".join(parts) or None)


class EquationSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    form: Literal["numu", "ab", "linear", "doebner-goldin"]
    coefficients: dict[str, Any] = Field(default_factory=dict)


class GridSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    L: float = Field(default_factory=lambda: settings.domain_length, gt=0)
    N: int = Field(default_factory=lambda: settings.grid_points)


class InitialSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    S: str = "0"
    T: str = "0"
    winding: int = 0
    background: float = 0.0  # subtracted from psi before measuring the width


class RunSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    t0: float = 0.0
    t1: float = 1.0
    dt: float = Field(default_factory=lambda: settings.time_step)
    snapshots: int = Field(default_factory=lambda: settings.snapshots, ge=2)
    t_eval: Optional[float] = None  # instant for invariants and transforms, default t0


class OutputSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    summary: str = "summary.json"
    trajectory: str = "trajectory.csv"
    final_field: Optional[str] = None


class Scenario(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = "scenario"
    equation: EquationSpec
    gauge: Optional[dict[str, Any]] = None
    grid: GridSpec = Field(default_factory=GridSpec)
    initial: InitialSpec = Field(default_factory=InitialSpec)
    run: RunSpec = Field(default_factory=RunSpec)
    outputs: OutputSpec = Field(default_factory=OutputSpec)

    @property
    def t_eval(self) -> float:
        return self.run.t0 if self.run.t_eval is None else self.run.t_eval


def parse_scenario(data: dict) -> Scenario:
    try:
        return Scenario.model_validate(data)
    except ValidationError as exc:
        raise _located(exc) from exc


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ScenarioError(f"scenario file {path} not found", path="scenario") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON at line {exc.lineno}: {exc.msg}", path="scenario") from exc
    scenario = parse_scenario(data)
    logger.info(f"Loaded scenario '{scenario.name}' ({scenario.equation.form}) from {path}")
    return scenario


# ============================================================================
# Builders
# ============================================================================


def build_equation(spec: EquationSpec) -> tuple[NuMuCoefficients, ABCoefficients]:
    """Both parameterizations of the configured equation."""
    try:
        if spec.form == "numu":
            nm = NuMuCoefficients(**spec.coefficients)
            return nm, ab_from_numu(nm)
        if spec.form == "ab":
            ab = ABCoefficients(**spec.coefficients)
            return numu_from_ab(ab), ab
        params = PhysicalParams(**spec.coefficients)
        if spec.form == "linear":
            ab = linear_schroedinger_ab(params)
            return numu_from_ab(ab), ab
        nm = doebner_goldin_numu(params)
        return nm, ab_from_numu(nm)
    except ValidationError as exc:
        raise _located(exc, "equation.coefficients") from exc
    except GaugeFamilyError as exc:
        raise exc.with_path("equation.coefficients")
    except TypeError as exc:
        raise ScenarioError(str(exc), path="equation.coefficients") from exc


def build_gauge(scenario: Scenario, required: bool = False) -> Optional[GaugeElement]:
    if scenario.gauge is None:
        if required:
            raise ScenarioError("this command needs a gauge element", path="gauge")
        return None
    try:
        return GaugeElement.from_json(scenario.gauge)
    except ValidationError as exc:
        raise _located(exc, "gauge") from exc


def build_grid(spec: GridSpec) -> Grid:
    return Grid(spec.L, spec.N)


def build_initial(scenario: Scenario) -> STField:
    grid = build_grid(scenario.grid)
    initial = scenario.initial
    try:
        return STField.from_expressions(grid, initial.S, initial.T, scenario.run.t0, initial.winding)
    except GaugeFamilyError as exc:
        raise exc.with_path("initial")
