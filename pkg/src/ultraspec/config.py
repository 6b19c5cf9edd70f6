"""Run configuration: JSON loading, validation, defaults."""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path
from typing import Optional

from .errors import GridTooLarge, ParseError, ValidationError
from .fields import EisensteinExtension, Field, FieldSpec, LaurentField, make_field
from .finite import (
    GRID_CAP_DEFAULT,
    MonomialPotential,
    RadialPotential,
    TablePotential,
    ZeroCellConvention,
)

__all__ = ["Tolerances", "RunConfig", "load_config"]

_KNOWN_KEYS = {
    "field",
    "n",
    "levels",
    "alpha",
    "kinetic_coeff",
    "potential",
    "zero_cell_convention",
    "tolerances",
    "output",
    "grid_cap",
    "ground_state_upper_bound",
}


@dataclass(frozen=True)
class Tolerances:
    cluster_tol: float = 1e-6
    radial_tol: float = 1e-8
    shell_tol: float = 1e-10
    residual_tol: float = 1e-9

    def __post_init__(self):
        for name in ("cluster_tol", "radial_tol", "shell_tol", "residual_tol"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValidationError(f"tolerances.{name}", f"{value} not in (0, 1)")


@dataclass
class RunConfig:
    field_spec: FieldSpec
    field: Field
    alpha: float
    kinetic_coeff: float
    potential: RadialPotential
    n: Optional[int] = None
    levels: Optional[tuple] = None
    convention: ZeroCellConvention = ZeroCellConvention.AVERAGE_OF_POWER
    tolerances: Tolerances = dataclass_field(default_factory=Tolerances)
    output_dir: str = "out"
    output_format: str = "csv"
    grid_cap: int = GRID_CAP_DEFAULT
    ground_state_upper_bound: Optional[float] = None

    def require_level(self) -> int:
        if self.n is not None:
            return self.n
        if self.levels:
            return max(self.levels)
        raise ValidationError("n", "a grid level is required for this command")

    def require_levels(self) -> tuple:
        if self.levels:
            return self.levels
        if self.n is not None:
            return (self.n,)
        raise ValidationError("levels", "grid levels are required for this command")


def _expect(data: dict, key: str, kinds, where: str = ""):
    name = f"{where}.{key}" if where else key
    if key not in data:
        raise ValidationError(name, "missing")
    value = data[key]
    if kinds is not None and not isinstance(value, kinds):
        raise ValidationError(name, f"expected {kinds}, got {type(value).__name__}")
    return value


def _parse_field(data) -> FieldSpec:
    if not isinstance(data, dict):
        raise ValidationError("field", "expected an object")
    family = _expect(data, "family", str, "field").lower()
    p = _expect(data, "p", int, "field")
    if family == "eisenstein":
        e = int(data.get("e", 1))
        return EisensteinExtension(p=p, e=e)
    if family == "laurent":
        f = int(data.get("f", 1))
        modulus = data.get("modulus")
        if modulus is not None:
            modulus = tuple(int(c) for c in modulus)
        return LaurentField(p=p, f=f, modulus=modulus)
    raise ValidationError("field.family", f"unknown family {family!r}")


def _parse_potential(data) -> RadialPotential:
    if not isinstance(data, dict):
        raise ValidationError("potential", "expected an object")
    kind = _expect(data, "kind", str, "potential").lower()
    try:
        if kind == "monomial":
            return MonomialPotential(
                c=float(_expect(data, "c", (int, float), "potential")),
                s=float(_expect(data, "s", (int, float), "potential")),
            )
        if kind == "table":
            values = _expect(data, "values", dict, "potential")
            return TablePotential(
                values={int(k): float(v) for k, v in values.items()},
                w0=float(data.get("w0", 0.0)),
            )
    except ValueError as exc:
        raise ValidationError("potential", str(exc)) from exc
    raise ValidationError("potential.kind", f"unknown kind {kind!r}")


def load_config(path) -> RunConfig:
    """Load and validate a JSON run configuration."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}",
            line=exc.lineno,
            column=exc.colno,
        ) from exc
    if not isinstance(data, dict):
        raise ValidationError("<document>", "top level must be an object")
    unknown = set(data) - _KNOWN_KEYS
    if unknown:
        raise ValidationError(sorted(unknown)[0], "unknown key")

    field_spec = _parse_field(_expect(data, "field", dict))
    field = make_field(field_spec)

    alpha = float(_expect(data, "alpha", (int, float)))
    if alpha <= 0:
        raise ValidationError("alpha", f"{alpha} must be > 0")
    kinetic = float(_expect(data, "kinetic_coeff", (int, float)))
    if kinetic < 0:
        raise ValidationError("kinetic_coeff", f"{kinetic} must be >= 0")
    potential = _parse_potential(_expect(data, "potential", dict))

    n = data.get("n")
    levels = data.get("levels")
    if n is None and levels is None:
        raise ValidationError("n", "one of 'n' or 'levels' is required")
    if n is not None:
        n = int(n)
        if n < 1:
            raise ValidationError("n", f"{n} must be >= 1")
    if levels is not None:
        if not isinstance(levels, list) or not levels:
            raise ValidationError("levels", "expected a non-empty list")
        levels = tuple(sorted(int(v) for v in levels))
        if levels[0] < 1:
            raise ValidationError("levels", "levels must be >= 1")

    convention_text = data.get("zero_cell_convention", ZeroCellConvention.AVERAGE_OF_POWER.value)
    try:
        convention = ZeroCellConvention(convention_text)
    except ValueError as exc:
        raise ValidationError("zero_cell_convention", str(convention_text)) from exc

    tol_data = data.get("tolerances", {})
    if not isinstance(tol_data, dict):
        raise ValidationError("tolerances", "expected an object")
    unknown = set(tol_data) - {"cluster_tol", "radial_tol", "shell_tol", "residual_tol"}
    if unknown:
        raise ValidationError(f"tolerances.{sorted(unknown)[0]}", "unknown key")
    tolerances = Tolerances(**{k: float(v) for k, v in tol_data.items()})

    out_data = data.get("output", {})
    if not isinstance(out_data, dict):
        raise ValidationError("output", "expected an object")
    output_dir = str(out_data.get("dir", "out"))
    output_format = str(out_data.get("format", "csv")).lower()
    if output_format not in ("csv", "json"):
        raise ValidationError("output.format", f"{output_format!r} not one of csv, json")

    grid_cap = int(data.get("grid_cap", GRID_CAP_DEFAULT))
    for level in (levels or ()) + ((n,) if n is not None else ()):
        size = field.q ** (2 * level)
        if size > grid_cap:
            raise GridTooLarge(
                f"level {level}: q**(2n) = {size} exceeds the grid cap {grid_cap}"
            )

    bound = data.get("ground_state_upper_bound")
    if bound is not None:
        bound = float(bound)
        if bound <= 0:
            raise ValidationError("ground_state_upper_bound", f"{bound} must be > 0")

    return RunConfig(
        field_spec=field_spec,
        field=field,
        alpha=alpha,
        kinetic_coeff=kinetic,
        potential=potential,
        n=n,
        levels=levels,
        convention=convention,
        tolerances=tolerances,
        output_dir=output_dir,
        output_format=output_format,
        grid_cap=grid_cap,
        ground_state_upper_bound=bound,
    )
