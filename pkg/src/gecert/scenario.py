"""JSON scenario schema: components, signals, grid, tolerances and outputs.

Units are SI throughout: ohms, volts, amperes, radians (and rad per unit
time for angular frequencies).  Unknown keys are rejected everywhere.
"""
from __future__ import annotations

import hashlib
import json
import math
from importlib import resources
from pathlib import Path
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from . import circuit
from .errors import GraphInvariantError, ScenarioError, UnsupportedTopology
from .setmap import Piece, PiecewiseGraph, Span, VerticalSegment, affine

BUNDLED = ("zener_static", "regulator_stepped", "regulator_sine", "diac_example", "diac_perturbed")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# -- graphs ----------------------------------------------------------------------

def _bound(x: float | None, default: float) -> float:
    return default if x is None else float(x)


class PieceSpec(_Strict):
    """Affine piece slope*z + intercept on a span; null bounds are infinite."""

    lo: float | None = None
    hi: float | None = None
    lo_closed: bool = False
    hi_closed: bool = False
    slope: float = 0.0
    intercept: float = 0.0


class SegmentSpec(_Strict):
    z: float
    lo: float
    hi: float


class GraphSpec(_Strict):
    pieces: list[PieceSpec] = Field(min_length=1)
    segments: list[SegmentSpec] = []

    def build(self) -> PiecewiseGraph:
        pieces = tuple(
            Piece(Span(_bound(p.lo, -math.inf), _bound(p.hi, math.inf), p.lo_closed, p.hi_closed),
                  affine(p.slope, p.intercept))
            for p in self.pieces
        )
        segs = tuple(VerticalSegment(s.z, s.lo, s.hi) for s in self.segments)
        return PiecewiseGraph(pieces, segs)


# -- components ----------------------------------------------------------------------

class ResistorSpec(_Strict):
    kind: Literal["resistor"]
    R: float = Field(gt=0)

    def build(self):
        return circuit.Resistor(self.R)


class DiodeSpec(_Strict):
    kind: Literal["practical_diode"]
    v_f: float = Field(gt=0)
    v_b: float = Field(gt=0)

    def build(self):
        return circuit.PracticalDiode(self.v_f, self.v_b)


class ZenerSpec(_Strict):
    kind: Literal["zener"]
    v_z: float = Field(5.1, gt=0)
    v_f: float = Field(0.7, gt=0)
    r_z: float = Field(0.0, ge=0)
    graph: GraphSpec | None = None

    def build(self):
        custom = self.graph.build() if self.graph is not None else None
        return circuit.Zener(self.v_z, self.v_f, self.r_z, custom)


class DiacSpec(_Strict):
    kind: Literal["diac"]
    d: float = 0.1
    i_bo: float = Field(circuit.DIAC_BREAKOVER_CURRENT, gt=0)

    @model_validator(mode="after")
    def _nonzero(self):
        if self.d == 0:
            raise ValueError("d must be nonzero")
        return self

    def build(self):
        return circuit.Diac(self.d, self.i_bo)


ComponentSpec = Annotated[Union[ResistorSpec, DiodeSpec, ZenerSpec, DiacSpec], Field(discriminator="kind")]


# -- signals ----------------------------------------------------------------------

class SinusoidSpec(_Strict):
    """amplitude * sin(omega * t + phase); ``cycles`` is shorthand for omega = 2*pi*cycles."""

    amplitude: float
    omega: float | None = None
    cycles: float | None = None
    phase: float = 0.0

    @model_validator(mode="after")
    def _one_frequency(self):
        if (self.omega is None) == (self.cycles is None):
            raise ValueError("give exactly one of omega or cycles")
        return self

    def build(self) -> circuit.Sinusoid:
        omega = self.omega if self.omega is not None else 2.0 * math.pi * self.cycles
        return circuit.Sinusoid(self.amplitude, omega, self.phase)


class TableSpec(_Strict):
    t: list[float] = Field(min_length=2)
    v: list[float] = Field(min_length=2)
    hold: bool = False


class SignalSpec(_Strict):
    dc: float = 0.0
    sinusoids: list[SinusoidSpec] = []
    table: TableSpec | None = None

    @model_validator(mode="after")
    def _table_alone(self):
        if self.table is not None and (self.dc != 0.0 or self.sinusoids):
            raise ValueError("a table signal cannot also carry dc or sinusoids")
        return self

    def build(self) -> circuit.Signal:
        if self.table is not None:
            try:
                tab = circuit.SampleTable(tuple(self.table.t), tuple(self.table.v), self.table.hold)
            except ValueError as exc:
                raise ScenarioError(f"source.table: {exc}") from None
            return circuit.Signal(table=tab)
        return circuit.Signal(self.dc, tuple(s.build() for s in self.sinusoids))


# -- scenario ----------------------------------------------------------------------

class Tolerances(_Strict):
    tol_res: float = Field(1e-6, gt=0)
    tol_z: float = Field(1e-12, gt=0)
    delta_link: float | None = Field(None, gt=0)
    samples: int = Field(256, ge=2)


class Scenario(_Strict):
    name: str = "scenario"
    description: str = ""
    components: list[ComponentSpec] = Field(min_length=1)
    source: SignalSpec
    perturbed_source: SignalSpec | None = None
    grid: int = Field(1024, ge=2)
    target_branch: int | None = Field(None, ge=1)
    tolerances: Tolerances = Tolerances()
    outputs: str = "out"

    def equation(self) -> circuit.GeneralizedEquation:
        return circuit.compose_series([c.build() for c in self.components], self.source.build())

    def perturbed_signal(self) -> circuit.Signal | None:
        return None if self.perturbed_source is None else self.perturbed_source.build()

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def _field_path(loc) -> str:
    out = ""
    for part in loc:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<root>"


def parse_scenario(text: str) -> Scenario:
    """Parse and validate scenario JSON.

    Syntax problems report line and column; schema problems name the field path.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        scn = Scenario.model_validate(raw)
    except ValidationError as exc:
        msgs = [f"{_field_path(e['loc'])}: {e['msg']}" for e in exc.errors()]
        raise ScenarioError("validation error: " + "; ".join(msgs)) from None
    try:
        scn.equation()
        scn.perturbed_signal()
    except ScenarioError:
        raise
    except (ValueError, UnsupportedTopology, GraphInvariantError) as exc:
        raise ScenarioError(f"validation error: {exc}") from None
    return scn


def bundled_text(name: str) -> str:
    if name not in BUNDLED:
        raise ScenarioError(f"no bundled scenario named {name!r}")
    return resources.files("gecert.scenarios").joinpath(f"{name}.json").read_text(encoding="utf-8")


def load_scenario(ref: str) -> Scenario:
    """A path to a JSON file, or the name of a bundled scenario."""
    path = Path(ref)
    if path.is_file():
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise ScenarioError(f"cannot read {ref}: {exc}") from None
        return parse_scenario(text)
    if ref in BUNDLED:
        return parse_scenario(bundled_text(ref))
    raise ScenarioError(f"{ref!r} is neither a file nor a bundled scenario")
