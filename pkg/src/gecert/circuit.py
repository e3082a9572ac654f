"""Series-circuit composition and time-varying input signals."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import SignalRangeError, UnsupportedTopology
from .setmap import (
    Form,
    Piece,
    PiecewiseGraph,
    Rational,
    Span,
    VerticalSegment,
    affine,
    constant,
    function_graph,
    sum_with_function,
)

DIAC_BREAKOVER_CURRENT = 1e-4
DIAC_BREAKOVER_VOLTAGE = 32.0


# -- signals -----------------------------------------------------------------

@dataclass(frozen=True)
class Sinusoid:
    amplitude: float
    omega: float
    phase: float = 0.0


@dataclass(frozen=True)
class SampleTable:
    ts: tuple[float, ...]
    vs: tuple[float, ...]
    hold: bool = False  # zero-order hold instead of linear interpolation

    def __post_init__(self):
        if len(self.ts) != len(self.vs) or len(self.ts) < 2:
            raise ValueError("sample table needs at least two (t, v) pairs")
        if any(b <= a for a, b in zip(self.ts, self.ts[1:])):
            raise ValueError("sample table times must be strictly increasing")
        if self.ts[0] > 0.0 or self.ts[-1] < 1.0:
            raise ValueError("sample table must cover [0, 1]")


@dataclass(frozen=True)
class Signal:
    """p(t) = dc + sum of sinusoids, or a sampled table when one is given."""

    dc: float = 0.0
    sinusoids: tuple[Sinusoid, ...] = ()
    table: SampleTable | None = None

    def values(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        if np.any(ts < -1e-12) or np.any(ts > 1.0 + 1e-12):
            raise SignalRangeError("signals are defined on t in [0, 1]")
        if self.table is not None:
            tt, vv = np.asarray(self.table.ts), np.asarray(self.table.vs)
            if self.table.hold:
                idx = np.clip(np.searchsorted(tt, ts, side="right") - 1, 0, len(tt) - 1)
                return vv[idx]
            return np.interp(ts, tt, vv)
        out = np.full(ts.shape, float(self.dc))
        for s in self.sinusoids:
            out = out + s.amplitude * np.sin(s.omega * ts + s.phase)
        return out

    def __call__(self, t: float) -> float:
        return eval_signal(self, t)

    def interpolate(self, other: "Signal", lam: float) -> "Signal":
        """(1 - lam) * self + lam * other.

        Two closed-form signals mix exactly; a table on either side forces a dense table.
        """
        if self.table is None and other.table is None:
            sins = tuple(Sinusoid((1.0 - lam) * s.amplitude, s.omega, s.phase) for s in self.sinusoids)
            sins += tuple(Sinusoid(lam * s.amplitude, s.omega, s.phase) for s in other.sinusoids)
            return Signal((1.0 - lam) * self.dc + lam * other.dc, sins)
        ts = np.linspace(0.0, 1.0, 8193)
        vs = (1.0 - lam) * self.values(ts) + lam * other.values(ts)
        return Signal(table=SampleTable(tuple(ts), tuple(vs)))


def eval_signal(p: Signal, t: float) -> float:
    if not (-1e-12 <= t <= 1.0 + 1e-12):
        raise SignalRangeError(f"t={t} outside [0, 1]")
    if p.table is not None:
        return float(p.values(np.array([t]))[0])
    v = float(p.dc)
    for s in p.sinusoids:
        v += s.amplitude * math.sin(s.omega * t + s.phase)
    return v


def signal_distance(p: Signal, q: Signal, grid=4096) -> float:
    """max_t |p(t) - q(t)| on a grid, refined inside the cell holding the discrete max."""
    if isinstance(grid, int):
        ts = np.linspace(0.0, 1.0, grid)
    else:
        ts = np.asarray(getattr(grid, "points", grid), dtype=float)
    diff = np.abs(p.values(ts) - q.values(ts))
    i = int(np.argmax(diff))
    best = float(diff[i])
    if p.table is None and q.table is None and len(ts) > 1:
        lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, len(ts) - 1)]
        res = minimize_scalar(lambda t: -abs(eval_signal(p, t) - eval_signal(q, t)),
                              bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        best = max(best, float(-res.fun))
    return best


# -- components --------------------------------------------------------------

@dataclass(frozen=True)
class Resistor:
    R: float

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError("resistance must be positive")


@dataclass(frozen=True)
class PracticalDiode:
    v_f: float
    v_b: float

    def __post_init__(self):
        if not (self.v_f > 0 and self.v_b > 0):
            raise ValueError("diode forward and breakdown voltages must be positive")

    def graph(self) -> PiecewiseGraph:
        return practical_diode_characteristic(self.v_f, self.v_b)


@dataclass(frozen=True)
class Zener:
    """Zener diode, either from an explicit graph or from (v_z, v_f, r_z)."""

    v_z: float = 5.1
    v_f: float = 0.7
    r_z: float = 0.0
    custom: PiecewiseGraph | None = None

    def graph(self) -> PiecewiseGraph:
        if self.custom is not None:
            return self.custom
        return zener_characteristic(self.v_z, self.v_f, self.r_z)


@dataclass(frozen=True)
class Diac:
    d: float = 0.1
    i_bo: float = DIAC_BREAKOVER_CURRENT

    def __post_init__(self):
        if self.d == 0:
            raise ValueError("DIAC coefficient d must be nonzero")

    def graph(self) -> PiecewiseGraph:
        return diac_characteristic(self.d, self.i_bo)


Component = Resistor | PracticalDiode | Zener | Diac


def practical_diode_characteristic(v_f: float, v_b: float) -> PiecewiseGraph:
    return PiecewiseGraph(
        (Piece(Span.open(-math.inf, 0.0), constant(-v_b)),
         Piece(Span.open(0.0, math.inf), constant(v_f))),
        (VerticalSegment(0.0, -v_b, v_f),),
    )


def zener_characteristic(v_z: float, v_f: float = 0.7, r_z: float = 0.0) -> PiecewiseGraph:
    return PiecewiseGraph(
        (Piece(Span.open(-math.inf, 0.0), affine(r_z, -v_z)),
         Piece(Span.open(0.0, math.inf), affine(r_z, v_f))),
        (VerticalSegment(0.0, -v_z, v_f),),
    )


def _diac_coefficients(d: float) -> tuple[float, float, float]:
    c = -252.52 * d
    return 15.0 * c, DIAC_BREAKOVER_VOLTAGE * d, c


def _diac_branch(d: float, i_bo: float) -> Form:
    """Forward branch (a(z - i_bo) - b) / (c(z - i_bo) - d) for z > i_bo."""
    a, b, c = _diac_coefficients(d)
    return Form(rational=Rational(a, -b, c, -d, i_bo))


def diac_characteristic(d: float = 0.1, i_bo: float = DIAC_BREAKOVER_CURRENT) -> PiecewiseGraph:
    """Five-branch DIAC i-v characteristic with a = 15c, b = 32d, c = -252.52d."""
    if d == 0:
        raise ValueError("d must be nonzero")
    v = DIAC_BREAKOVER_VOLTAGE
    fwd = _diac_branch(d, i_bo)
    return PiecewiseGraph(
        (
            Piece(Span.open(-math.inf, -i_bo), fwd.mirrored()),
            Piece(Span(-i_bo, 0.0, True, False), constant(-v)),
            Piece(Span(0.0, i_bo, False, True), constant(v)),
            Piece(Span.open(i_bo, math.inf), fwd),
        ),
        (VerticalSegment(0.0, -v, v),),
    )


def diac_split(R: float = 220.0, d: float = 0.1, i_bo: float = DIAC_BREAKOVER_CURRENT):
    """The rearranged pair (f*, F*) with f* single-valued and F* a sign-like map.

    ``f* + F*`` equals ``R z + F_DIAC(z)`` as a set-valued map.
    """
    v = DIAC_BREAKOVER_VOLTAGE
    fwd = _diac_branch(d, i_bo)
    f_star = function_graph([
        (Span.open(-math.inf, -i_bo), affine(R) + fwd.mirrored().shifted(v)),
        (Span.closed(-i_bo, i_bo), affine(R)),
        (Span.open(i_bo, math.inf), affine(R) + fwd.shifted(-v)),
    ])
    F_star = PiecewiseGraph(
        (Piece(Span.open(-math.inf, 0.0), constant(-v)),
         Piece(Span.open(0.0, math.inf), constant(v))),
        (VerticalSegment(0.0, -v, v),),
    )
    return f_star, F_star


def zero_graph() -> PiecewiseGraph:
    return function_graph([(Span(), constant(0.0))])


# -- generalized equation ------------------------------------------------------

@dataclass(frozen=True)
class GeneralizedEquation:
    """0 in f(z) - p(t) + F(z) with f single-valued and F closed-graph set-valued."""

    f: PiecewiseGraph
    F: PiecewiseGraph
    p: Signal = field(default_factory=Signal)

    def __post_init__(self):
        if not self.f.is_single_valued:
            raise ValueError("f must be single-valued")

    @cached_property
    def total(self) -> PiecewiseGraph:
        """The graph of f + F."""
        return sum_with_function(self.f, self.F)

    def with_signal(self, q: Signal) -> "GeneralizedEquation":
        eq = GeneralizedEquation(self.f, self.F, q)
        # f + F does not depend on the signal
        eq.__dict__["total"] = self.total
        return eq


def compose_series(components: Sequence[Component], source: Signal,
                   topology: str = "series") -> GeneralizedEquation:
    """KVL/KCL for a single loop: source = sum of component voltages at loop current z."""
    if topology != "series":
        raise UnsupportedTopology(f"only series loops are supported, got {topology!r}")
    if not components:
        raise UnsupportedTopology("a circuit needs at least one component")
    r_total = 0.0
    set_valued = []
    for comp in components:
        if isinstance(comp, Resistor):
            r_total += comp.R
        elif isinstance(comp, (PracticalDiode, Zener, Diac)):
            set_valued.append(comp)
        else:
            raise UnsupportedTopology(f"unknown component {comp!r}")
    if len(set_valued) > 1:
        raise UnsupportedTopology("at most one set-valued component per loop")
    f = function_graph([(Span(), affine(r_total))])
    F = set_valued[0].graph() if set_valued else zero_graph()
    return GeneralizedEquation(f, F, source)
