"""Instance descriptions: strict schema, environment construction and
canonical JSON."""
from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path
from typing import Annotated, Any, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .exceptions import ConfigError
from .funcspace import (
    LinearEffort,
    PiecewiseLinearEffort,
    PolynomialCost,
    PowerCost,
    PowerEffort,
    ScaledCost,
)
from .model import FULL, Environment, FullRange, Interval, Points, build_environment

SIG_DIGITS = 12


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True, frozen=True)


# effort families

class LinearEffortParams(_Strict):
    slope: float
    intercept: float = 0.0


class PowerEffortParams(_Strict):
    exponent: float
    scale: float = 1.0


class PiecewiseEffortParams(_Strict):
    xs: list[float]
    cs: list[float]


class LinearEffortSpec(_Strict):
    family: Literal["linear"]
    params: LinearEffortParams


class PowerEffortSpec(_Strict):
    family: Literal["power"]
    params: PowerEffortParams


class PiecewiseEffortSpec(_Strict):
    family: Literal["piecewise_linear"]
    params: PiecewiseEffortParams


EffortSpec = Annotated[Union[LinearEffortSpec, PowerEffortSpec, PiecewiseEffortSpec],
                       Field(discriminator="family")]


# cost families

class PowerCostParams(_Strict):
    beta: float
    exponent: float


class PolynomialCostParams(_Strict):
    coefficients: list[float]


class PowerCostSpec(_Strict):
    family: Literal["power"]
    params: PowerCostParams


class PolynomialCostSpec(_Strict):
    family: Literal["polynomial"]
    params: PolynomialCostParams


class ScaledCostParams(_Strict):
    eta: float
    base: Annotated[Union[PowerCostSpec, PolynomialCostSpec], Field(discriminator="family")]


class ScaledCostSpec(_Strict):
    family: Literal["scaled"]
    params: ScaledCostParams


CostSpec = Annotated[Union[PowerCostSpec, PolynomialCostSpec, ScaledCostSpec],
                     Field(discriminator="family")]


class TypeSpec(_Strict):
    prob: float
    cost: CostSpec

    @field_validator("prob")
    @classmethod
    def _open_unit(cls, v):
        if not 0 < v < 1:
            raise ValueError("probability must lie in (0, 1)")
        return v


class MenuGrid(_Strict):
    convex: int = 400
    general: int = 40
    ntype: int = 201


class SolverSpec(_Strict):
    effort_grid: int = 2001
    menu_grid: MenuGrid = MenuGrid()
    refine_tol: float = 1e-8
    seed: int = 0

    @field_validator("effort_grid")
    @classmethod
    def _grid(cls, v):
        if v < 3:
            raise ValueError("effort grid needs at least 3 points")
        return v


class InstanceConfig(_Strict):
    output_interval: list[float] = Field(min_length=2, max_length=2)
    effort: EffortSpec
    types: list[TypeSpec] = Field(min_length=2)
    solver: SolverSpec = SolverSpec()

    @field_validator("output_interval")
    @classmethod
    def _ordered(cls, v):
        if not v[0] < v[1]:
            raise ValueError("output interval must satisfy lower < upper")
        return v


# ---------------------------------------------------------------------------


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "\n".join(lines)


def parse_config(text: str) -> InstanceConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return InstanceConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from None


def load_config(path: str | Path) -> InstanceConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


def _build_cost(spec):
    p = spec.params
    if spec.family == "power":
        return PowerCost(p.beta, p.exponent)
    if spec.family == "polynomial":
        return PolynomialCost(tuple(p.coefficients))
    return ScaledCost(p.eta, _build_cost(p.base))


def _build_effort(spec):
    p = spec.params
    if spec.family == "linear":
        return LinearEffort(p.slope, p.intercept)
    if spec.family == "power":
        return PowerEffort(p.exponent, p.scale)
    return PiecewiseLinearEffort(tuple(p.xs), tuple(p.cs))


def environment_from_config(cfg: InstanceConfig) -> Environment:
    try:
        effort = _build_effort(cfg.effort)
        types = [(t.prob, _build_cost(t.cost)) for t in cfg.types]
        return build_environment(cfg.output_interval, effort, types, cfg.solver.effort_grid)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# canonical serialisation


def _round(v: float):
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    r = float(f"{v:.{SIG_DIGITS}g}")
    return 0.0 if r == 0 else r


def range_to_jsonable(rng) -> Any:
    if isinstance(rng, FullRange):
        return "full"
    if isinstance(rng, Interval):
        return {"interval": [_round(rng.lo), _round(rng.hi)]}
    if isinstance(rng, Points):
        return {"points": [_round(x) for x in rng.points]}
    raise TypeError(f"not a range: {rng!r}")


def range_from_jsonable(obj) -> Any:
    if obj == "full":
        return FULL
    if isinstance(obj, dict) and set(obj) == {"interval"}:
        lo, hi = obj["interval"]
        return Interval(float(lo), float(hi))
    if isinstance(obj, dict) and set(obj) == {"points"}:
        return Points(tuple(float(x) for x in obj["points"]))
    raise ConfigError(f"unrecognised range {obj!r}")


def to_jsonable(obj) -> Any:
    """Plain JSON data with floats rounded to SIG_DIGITS significant digits."""
    if isinstance(obj, (FullRange, Interval, Points)):
        return range_to_jsonable(obj)
    if isinstance(obj, BaseModel):
        return to_jsonable(obj.model_dump(mode="python"))
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _round(float(obj))
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def canonical_json(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n"


def canonical_config(cfg: InstanceConfig) -> str:
    return canonical_json(cfg)


# ---------------------------------------------------------------------------
# bundled instances


EXAMPLES: dict[str, dict] = {
    "ef-ex1": {
        "output_interval": [0.0, 0.5],
        "effort": {"family": "linear", "params": {"slope": 1.0}},
        "types": [
            {"prob": 0.5, "cost": {"family": "power", "params": {"beta": 1.0, "exponent": 2.0}}},
            {"prob": 0.5, "cost": {"family": "power",
                                   "params": {"beta": 2.0 / 3.0, "exponent": 3.0}}},
        ],
    },
    # quadratic costs with a concave effort function c(x) = sqrt(x) on [0, 1]
    "osc-ex1": {
        "output_interval": [0.0, 1.0],
        "effort": {"family": "power", "params": {"exponent": 0.5}},
        "types": [
            {"prob": 0.5, "cost": {"family": "power", "params": {"beta": 1.0, "exponent": 2.0}}},
            {"prob": 0.5, "cost": {"family": "power", "params": {"beta": 0.5, "exponent": 2.0}}},
        ],
    },
}


def example_config(name: str) -> InstanceConfig:
    if name not in EXAMPLES:
        raise ConfigError(f"unknown example {name!r}; choose from {sorted(EXAMPLES)}")
    return InstanceConfig.model_validate(EXAMPLES[name])
