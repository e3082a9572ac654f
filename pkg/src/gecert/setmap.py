"""Closed-form piecewise set-valued graphs in the current/voltage plane.

A graph is a list of function pieces (each with an explicit domain and a
closed-form expression) plus vertical segments.  Every expression is of the
shape ``slope*z + intercept + (ns*(z-s) + no) / (ds*(z-s) + do)`` with the
rational term optional, which covers the affine, constant, shifted-rational
and "affine plus rational" taxonomy.  Because everything is closed form,
inversion, stationary points and derivative bounds are exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AtKink,
    DomainMiss,
    GraphInvariantError,
    IncompatibleDomain,
    NondifferentiablePiece,
)

# dedup tolerance for abscissas (A) and inclusion tolerance for ordinates (V)
TOL_Z = 1e-12
TOL_Y = 1e-9


@dataclass(frozen=True)
class Span:
    """A real interval with explicit open/closed ends."""

    lo: float = -math.inf
    hi: float = math.inf
    lo_closed: bool = False
    hi_closed: bool = False

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty span [{self.lo}, {self.hi}]")
        if (math.isinf(self.lo) and self.lo_closed) or (math.isinf(self.hi) and self.hi_closed):
            raise ValueError("infinite span ends must be open")
        if self.lo == self.hi and not (self.lo_closed and self.hi_closed):
            raise ValueError("a single-point span must be closed")

    @classmethod
    def closed(cls, lo, hi):
        return cls(lo, hi, not math.isinf(lo), not math.isinf(hi))

    @classmethod
    def open(cls, lo, hi):
        return cls(lo, hi, False, False)

    @classmethod
    def point(cls, z):
        return cls(z, z, True, True)

    def contains(self, z: float) -> bool:
        if z < self.lo or z > self.hi:
            return False
        if z == self.lo and not self.lo_closed:
            return False
        if z == self.hi and not self.hi_closed:
            return False
        return True

    def contains_array(self, z: np.ndarray) -> np.ndarray:
        lo_ok = (z >= self.lo) if self.lo_closed else (z > self.lo)
        hi_ok = (z <= self.hi) if self.hi_closed else (z < self.hi)
        return lo_ok & hi_ok

    def is_interior(self, z: float) -> bool:
        return self.lo < z < self.hi

    def covers(self, other: "Span") -> bool:
        lo_ok = self.lo < other.lo or (self.lo == other.lo and (self.lo_closed or not other.lo_closed))
        hi_ok = self.hi > other.hi or (self.hi == other.hi and (self.hi_closed or not other.hi_closed))
        return lo_ok and hi_ok

    def intersect(self, other: "Span") -> "Span | None":
        if self.lo > other.lo:
            lo, lo_closed = self.lo, self.lo_closed
        elif other.lo > self.lo:
            lo, lo_closed = other.lo, other.lo_closed
        else:
            lo, lo_closed = self.lo, self.lo_closed and other.lo_closed
        if self.hi < other.hi:
            hi, hi_closed = self.hi, self.hi_closed
        elif other.hi < self.hi:
            hi, hi_closed = other.hi, other.hi_closed
        else:
            hi, hi_closed = self.hi, self.hi_closed and other.hi_closed
        if lo > hi or (lo == hi and not (lo_closed and hi_closed)):
            return None
        return Span(lo, hi, lo_closed, hi_closed)

    def negated(self) -> "Span":
        return Span(-self.hi, -self.lo, self.hi_closed, self.lo_closed)


@dataclass(frozen=True)
class Rational:
    """``(num_slope*(z-shift) + num_offset) / (den_slope*(z-shift) + den_offset)``."""

    num_slope: float
    num_offset: float
    den_slope: float
    den_offset: float
    shift: float = 0.0

    @property
    def det(self) -> float:
        # numerator of the derivative: d/du (a u + b)/(g u + d) = (a d - b g)/(g u + d)^2
        return self.num_slope * self.den_offset - self.num_offset * self.den_slope

    @property
    def pole(self) -> float | None:
        if self.den_slope == 0:
            return None
        return self.shift - self.den_offset / self.den_slope

    def value(self, z):
        u = z - self.shift
        return (self.num_slope * u + self.num_offset) / (self.den_slope * u + self.den_offset)

    def derivative(self, z):
        u = z - self.shift
        return self.det / (self.den_slope * u + self.den_offset) ** 2

    def second_derivative(self, z):
        u = z - self.shift
        den = self.den_slope * u + self.den_offset
        return -2.0 * self.det * self.den_slope / den**3


@dataclass(frozen=True)
class Form:
    """Closed-form piece expression: affine part plus an optional rational term."""

    slope: float = 0.0
    intercept: float = 0.0
    rational: Rational | None = None

    def __post_init__(self):
        r = self.rational
        if r is None:
            return
        if r.den_slope == 0 and r.den_offset == 0:
            raise ValueError("rational term with identically zero denominator")
        if r.den_slope == 0:
            # (ns*u + no)/do is affine in z
            k = r.num_slope / r.den_offset
            object.__setattr__(self, "slope", self.slope + k)
            object.__setattr__(self, "intercept", self.intercept + r.num_offset / r.den_offset - k * r.shift)
            object.__setattr__(self, "rational", None)
        elif r.det == 0:
            # numerator proportional to denominator: constant away from the pole
            object.__setattr__(self, "intercept", self.intercept + r.num_slope / r.den_slope)
            object.__setattr__(self, "rational", None)

    @property
    def kind(self) -> str:
        if self.rational is None:
            return "constant" if self.slope == 0 else "affine"
        if self.slope == 0 and self.intercept == 0:
            return "rational"
        return "sum"

    @property
    def is_flat(self) -> bool:
        return self.rational is None and self.slope == 0

    def value(self, z):
        v = self.slope * z + self.intercept
        if self.rational is not None:
            v = v + self.rational.value(z)
        return v

    def derivative(self, z):
        d = self.slope if np.ndim(z) == 0 else np.full(np.shape(z), float(self.slope))
        if self.rational is not None:
            d = d + self.rational.derivative(z)
        return d

    def second_derivative(self, z):
        if self.rational is None:
            return 0.0 if np.ndim(z) == 0 else np.zeros(np.shape(z))
        return self.rational.second_derivative(z)

    def __add__(self, other: "Form") -> "Form":
        if self.rational is not None and other.rational is not None:
            raise IncompatibleDomain("two rational terms on a common sub-domain have no closed form here")
        return Form(self.slope + other.slope, self.intercept + other.intercept, self.rational or other.rational)

    def shifted(self, dy: float) -> "Form":
        return Form(self.slope, self.intercept + dy, self.rational)

    def scaled(self, k: float) -> "Form":
        r = self.rational
        if r is not None:
            r = Rational(k * r.num_slope, k * r.num_offset, r.den_slope, r.den_offset, r.shift)
        return Form(k * self.slope, k * self.intercept, r)

    def mirrored(self) -> "Form":
        """The form of ``z -> -value(-z)``."""
        r = self.rational
        if r is not None:
            # -(a(-z-s)+b)/(g(-z-s)+d) = (a(z+s) - b)/(-g(z+s) + d)
            r = Rational(r.num_slope, -r.num_offset, -r.den_slope, r.den_offset, -r.shift)
        return Form(self.slope, -self.intercept, r)

    def stationary_points(self) -> list[float]:
        """Abscissas where the derivative vanishes (closed form)."""
        r = self.rational
        if r is None or self.slope == 0:
            return []
        ratio = -r.det / self.slope
        if ratio <= 0:
            return []
        root = math.sqrt(ratio)
        return sorted(r.shift + (sgn * root - r.den_offset) / r.den_slope for sgn in (-1.0, 1.0))

    def roots(self, ys: np.ndarray) -> list[np.ndarray]:
        """Candidate abscissas solving ``value(z) = y`` for each y (NaN where none).

        Flat forms return no candidates; continuum solutions are handled by the caller.
        """
        ys = np.asarray(ys, dtype=float)
        r = self.rational
        if r is None:
            if self.slope == 0:
                return []
            return [(ys - self.intercept) / self.slope]
        m = self.slope
        a, b, g, d, s = r.num_slope, r.num_offset, r.den_slope, r.den_offset, r.shift
        # in u = z - s: (m u + k)(g u + d) + a u + b = 0
        k = m * s + self.intercept - ys
        A2 = m * g
        A1 = m * d + k * g + a
        A0 = k * d + b
        with np.errstate(divide="ignore", invalid="ignore"):
            if A2 == 0:
                cands = [np.where(A1 != 0, -A0 / A1, np.nan)]
            else:
                disc = A1 * A1 - 4.0 * A2 * A0
                scale = A1 * A1 + np.abs(4.0 * A2 * A0)
                disc = np.where((disc < 0) & (disc > -1e-13 * scale), 0.0, disc)
                sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
                q = -0.5 * (A1 + np.copysign(sq, A1))
                u1 = q / A2
                u2 = np.where(q != 0, A0 / q, np.nan)
                cands = [u1, u2]
            out = []
            for u in cands:
                u = self._polish(u, k)
                out.append(u + s)
        return out

    def _polish(self, u: np.ndarray, k: np.ndarray) -> np.ndarray:
        r = self.rational
        m = self.slope
        a, b, g, d = r.num_slope, r.num_offset, r.den_slope, r.den_offset

        def resid(x):
            return m * x + k + (a * x + b) / (g * x + d)

        for _ in range(2):
            h = resid(u)
            hp = m + r.det / (g * u + d) ** 2
            step = np.where((hp != 0) & np.isfinite(hp), h / hp, 0.0)
            trial = u - step
            better = np.abs(resid(trial)) < np.abs(h)
            u = np.where(better, trial, u)
        return u


def affine(slope: float, intercept: float = 0.0) -> Form:
    return Form(slope, intercept)


def constant(value: float) -> Form:
    return Form(0.0, value)


def shifted_rational(num_slope, num_offset, den_slope, den_offset, shift=0.0) -> Form:
    return Form(0.0, 0.0, Rational(num_slope, num_offset, den_slope, den_offset, shift))


@dataclass(frozen=True)
class Piece:
    span: Span
    form: Form

    def __post_init__(self):
        r = self.form.rational
        if r is not None and r.pole is not None:
            pole = r.pole
            if self.span.lo <= pole <= self.span.hi:
                raise GraphInvariantError(f"rational denominator vanishes at z={pole} inside {self.span}")


@dataclass(frozen=True)
class VerticalSegment:
    z0: float
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise GraphInvariantError(f"segment at z={self.z0} has lo > hi")


@dataclass(frozen=True)
class ValueSet:
    """Finite union of points and closed intervals, kept in canonical form."""

    points: tuple[float, ...] = ()
    intervals: tuple[tuple[float, float], ...] = ()

    @classmethod
    def build(cls, points: Iterable[float] = (), intervals: Iterable[tuple[float, float]] = (),
              tol: float = TOL_Y) -> "ValueSet":
        ivs = sorted((float(lo), float(hi)) for lo, hi in intervals)
        merged: list[list[float]] = []
        pts = [float(p) for p in points]
        for lo, hi in ivs:
            if hi - lo <= 0:
                pts.append(lo)
                continue
            if merged and lo <= merged[-1][1] + tol:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        kept: list[float] = []
        for p in sorted(pts):
            if any(lo - tol <= p <= hi + tol for lo, hi in merged):
                continue
            if kept and p - kept[-1] <= tol:
                continue
            kept.append(p)
        return cls(tuple(kept), tuple((lo, hi) for lo, hi in merged))

    @property
    def is_empty(self) -> bool:
        return not self.points and not self.intervals

    def contains(self, y: float, tol: float = TOL_Y) -> bool:
        return self.distance(y) <= tol

    def distance(self, y: float) -> float:
        best = math.inf
        for p in self.points:
            best = min(best, abs(y - p))
        for lo, hi in self.intervals:
            best = min(best, 0.0 if lo <= y <= hi else min(abs(y - lo), abs(y - hi)))
        return best

    def shift(self, c: float) -> "ValueSet":
        return ValueSet(tuple(p + c for p in self.points), tuple((lo + c, hi + c) for lo, hi in self.intervals))

    def negated(self) -> "ValueSet":
        return ValueSet(tuple(sorted(-p for p in self.points)),
                        tuple(sorted((-hi, -lo) for lo, hi in self.intervals)))

    def set_distance(self, other: "ValueSet") -> float:
        """Coordinate-wise distance between sets of the same shape; inf otherwise.

        For sets with matching structure this bounds the Hausdorff distance.
        """
        if len(self.points) != len(other.points) or len(self.intervals) != len(other.intervals):
            return math.inf
        d = 0.0
        for p, q in zip(self.points, other.points):
            d = max(d, abs(p - q))
        for (a, b), (c, e) in zip(self.intervals, other.intervals):
            d = max(d, abs(a - c), abs(b - e))
        return d

    def isclose(self, other: "ValueSet", tol: float = TOL_Y) -> bool:
        return self.set_distance(other) <= tol


@dataclass(frozen=True)
class FoldPoint:
    y: float
    z: float
    kind: str  # "local-max" | "local-min" | "segment-endpoint"


@dataclass(frozen=True)
class PiecewiseGraph:
    """A closed set-valued map R => R given by function pieces and vertical segments."""

    pieces: tuple[Piece, ...]
    segments: tuple[VerticalSegment, ...] = ()
    domain: Span = field(default_factory=Span)

    def __post_init__(self):
        pieces = tuple(sorted(self.pieces, key=lambda p: (p.span.lo, not p.span.lo_closed)))
        segments = tuple(sorted(self.segments, key=lambda s: (s.z0, s.lo)))
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "segments", segments)
        self._check_partition()
        self._check_closed()

    def _check_partition(self):
        pieces, dom = self.pieces, self.domain
        seg_z = {s.z0 for s in self.segments}
        for p in pieces:
            if not dom.covers(p.span):
                raise GraphInvariantError(f"piece {p.span} leaves the declared domain {dom}")
        for s in self.segments:
            if not dom.contains(s.z0):
                raise GraphInvariantError(f"segment at z={s.z0} outside the declared domain")
        for left, right in zip(pieces, pieces[1:]):
            a, b = left.span, right.span
            if a.hi > b.lo or (a.hi == b.lo and a.hi_closed and b.lo_closed):
                raise GraphInvariantError(f"overlapping pieces {a} and {b}")
            if a.hi < b.lo:
                raise GraphInvariantError(f"gap ({a.hi}, {b.lo}) not covered")
            if not (a.hi_closed or b.lo_closed) and a.hi not in seg_z:
                raise GraphInvariantError(f"abscissa {a.hi} not covered")
        if not pieces:
            if not (dom.lo == dom.hi and dom.lo in seg_z):
                raise GraphInvariantError("graph without pieces must be a single segment")
            return
        first, last = pieces[0].span, pieces[-1].span
        if first.lo != dom.lo or last.hi != dom.hi:
            raise GraphInvariantError("pieces do not reach the ends of the declared domain")
        if dom.lo_closed and not first.lo_closed and dom.lo not in seg_z:
            raise GraphInvariantError(f"domain end {dom.lo} not covered")
        if dom.hi_closed and not last.hi_closed and dom.hi not in seg_z:
            raise GraphInvariantError(f"domain end {dom.hi} not covered")

    def _check_closed(self):
        for p in self.pieces:
            for end, closed in ((p.span.lo, p.span.lo_closed), (p.span.hi, p.span.hi_closed)):
                if closed or math.isinf(end) or not self.domain.contains(end):
                    continue
                limit = float(p.form.value(end))
                if not self.evaluate(end).contains(limit, TOL_Y):
                    raise GraphInvariantError(
                        f"graph not closed at z={end}: limit {limit} missing from the set value")

    @property
    def is_single_valued(self) -> bool:
        return not self.segments

    def boundaries(self) -> list[float]:
        zs = {s.z0 for s in self.segments}
        for p in self.pieces:
            for end in (p.span.lo, p.span.hi):
                if not math.isinf(end):
                    zs.add(end)
        return sorted(zs)

    def evaluate(self, z: float) -> ValueSet:
        if not self.domain.contains(z):
            raise DomainMiss(f"z={z} outside {self.domain}")
        pts = [float(p.form.value(z)) for p in self.pieces if p.span.contains(z)]
        ivs = [(s.lo, s.hi) for s in self.segments if s.z0 == z]
        return ValueSet.build(pts, ivs)

    def value(self, z: float) -> float:
        """The single value at z; raises if the graph is multivalued there."""
        vs = self.evaluate(z)
        if vs.intervals or len(vs.points) != 1:
            raise DomainMiss(f"graph is not single-valued at z={z}")
        return vs.points[0]

    def piece_at(self, z: float) -> Piece | None:
        for p in self.pieces:
            if p.span.contains(z):
                return p
        return None

    def piece_values(self, zs: np.ndarray) -> np.ndarray:
        """Vectorised piece evaluation; NaN where no piece covers z."""
        zs = np.asarray(zs, dtype=float)
        out = np.full(zs.shape, np.nan)
        for p in self.pieces:
            mask = p.span.contains_array(zs)
            if mask.any():
                out[mask] = p.form.value(zs[mask])
        return out

    def negated_mirror(self) -> "PiecewiseGraph":
        """The graph of ``z -> -G(-z)``."""
        return PiecewiseGraph(
            tuple(Piece(p.span.negated(), p.form.mirrored()) for p in self.pieces),
            tuple(VerticalSegment(-s.z0, -s.hi, -s.lo) for s in self.segments),
            self.domain.negated(),
        )


def function_graph(pieces: Sequence[tuple[Span, Form]], domain: Span | None = None) -> PiecewiseGraph:
    """Build a single-valued piecewise function as a graph without segments."""
    return PiecewiseGraph(tuple(Piece(s, f) for s, f in pieces), (), domain or Span())


def evaluate(G: PiecewiseGraph, z: float) -> ValueSet:
    return G.evaluate(z)


def _dedup(values: Iterable[float], tol: float) -> list[float]:
    out: list[float] = []
    for v in sorted(values):
        if out and v - out[-1] <= tol:
            continue
        out.append(v)
    return out


def preimage_many(G: PiecewiseGraph, ys: Sequence[float], tol_z: float = TOL_Z) -> list[ValueSet]:
    """All z with ``y in G(z)`` for each y, as point/interval sets over the abscissa."""
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    n = ys.size
    pts: list[list[float]] = [[] for _ in range(n)]
    ivs: list[list[tuple[float, float]]] = [[] for _ in range(n)]
    for p in G.pieces:
        if p.form.is_flat:
            hit = np.nonzero(np.abs(ys - p.form.intercept) <= TOL_Y)[0]
            for i in hit:
                if p.span.lo == p.span.hi:
                    pts[i].append(p.span.lo)
                else:
                    ivs[i].append((p.span.lo, p.span.hi))
            continue
        for cand in p.form.roots(ys):
            ok = np.isfinite(cand) & p.span.contains_array(cand)
            for i in np.nonzero(ok)[0]:
                pts[i].append(float(cand[i]))
    for s in G.segments:
        hit = np.nonzero((ys >= s.lo) & (ys <= s.hi))[0]
        for i in hit:
            pts[i].append(s.z0)
    # without intervals the deduplicated points are already canonical
    return [ValueSet.build(_dedup(pts[i], tol_z), ivs[i], tol=tol_z) if ivs[i]
            else ValueSet(tuple(_dedup(pts[i], tol_z))) for i in range(n)]


def preimage(G: PiecewiseGraph, y: float, tol_z: float = TOL_Z) -> ValueSet:
    return preimage_many(G, [y], tol_z)[0]


def invert_at(G: PiecewiseGraph, y: float, tol_z: float = TOL_Z) -> list[float]:
    """Isolated abscissas z with ``y in G(z)``, sorted and deduplicated.

    Continuum solutions on flat pieces are reported only by :func:`preimage`.
    """
    return list(preimage(G, y, tol_z).points)


def _as_graph(f) -> PiecewiseGraph:
    if isinstance(f, PiecewiseGraph):
        return f
    if isinstance(f, Form):
        return function_graph([(Span(), f)])
    raise TypeError(f"expected PiecewiseGraph or Form, got {type(f).__name__}")


def sum_with_function(f, F: PiecewiseGraph) -> PiecewiseGraph:
    """Graph of ``z -> f(z) + F(z)`` for a single-valued piecewise function f."""
    fg = _as_graph(f)
    if not fg.is_single_valued:
        raise IncompatibleDomain("the single-valued summand has vertical segments")
    if not fg.domain.covers(F.domain):
        raise IncompatibleDomain(f"f is defined on {fg.domain}, F needs {F.domain}")
    pieces = []
    for pF in F.pieces:
        for pf in fg.pieces:
            span = pF.span.intersect(pf.span)
            if span is not None:
                pieces.append(Piece(span, pf.form + pF.form))
    segments = [VerticalSegment(s.z0, s.lo + fg.value(s.z0), s.hi + fg.value(s.z0)) for s in F.segments]
    return PiecewiseGraph(tuple(pieces), tuple(segments), F.domain)


def _neighbours(G: PiecewiseGraph, x: float) -> tuple[Piece | None, Piece | None]:
    left = right = None
    for p in G.pieces:
        if p.span.hi == x and p.span.lo < x:
            left = p
        if p.span.lo == x and p.span.hi > x:
            right = p
    return left, right


def fold_points(G: PiecewiseGraph) -> list[FoldPoint]:
    """Points where single-valuedness of the inverse is lost, sorted by z."""
    folds: list[FoldPoint] = []
    for p in G.pieces:
        r = p.form.rational
        if r is not None and r.pole is not None and p.span.lo <= r.pole <= p.span.hi:
            raise NondifferentiablePiece(f"piece {p.span} has a pole")
        for z in p.form.stationary_points():
            if p.span.is_interior(z):
                curv = float(p.form.second_derivative(z))
                kind = "local-max" if curv < 0 else "local-min"
                folds.append(FoldPoint(float(p.form.value(z)), z, kind))
    seg_z = {s.z0 for s in G.segments}
    for s in G.segments:
        folds.append(FoldPoint(s.lo, s.z0, "segment-endpoint"))
        if s.hi != s.lo:
            folds.append(FoldPoint(s.hi, s.z0, "segment-endpoint"))
    for x in G.boundaries():
        if x in seg_z:
            continue
        left, right = _neighbours(G, x)
        if left is None or right is None:
            continue
        vl, vr = float(left.form.value(x)), float(right.form.value(x))
        if abs(vl - vr) > TOL_Y:
            folds.append(FoldPoint(vl, x, "segment-endpoint"))
            folds.append(FoldPoint(vr, x, "segment-endpoint"))
            continue
        dl, dr = float(left.form.derivative(x)), float(right.form.derivative(x))
        y = G.evaluate(x).points[0] if G.evaluate(x).points else vl
        if dl > 0 and dr < 0:
            folds.append(FoldPoint(y, x, "local-max"))
        elif dl < 0 and dr > 0:
            folds.append(FoldPoint(y, x, "local-min"))
    return sorted(folds, key=lambda f: (f.z, f.y))


def derivative(G: PiecewiseGraph, z: float) -> float:
    """Closed-form slope of the piece containing z in its interior."""
    if z in G.boundaries():
        raise AtKink(f"z={z} is a piece boundary or segment abscissa")
    for p in G.pieces:
        if p.span.is_interior(z):
            return float(p.form.derivative(z))
    raise DomainMiss(f"z={z} is not inside any piece")


def min_abs_slope(G: PiecewiseGraph, lo: float, hi: float) -> float:
    """Infimum of ``|G'(v)|`` over the function pieces meeting ``[lo, hi]``.

    Each piece derivative ``m + K/(g u + d)^2`` is monotone away from the pole,
    so the infimum sits at an end of the clipped interval unless a stationary
    point lies inside.  Vertical segments never lower the infimum.
    """
    best = math.inf
    window = Span.closed(lo, hi)
    for p in G.pieces:
        part = p.span.intersect(window)
        if part is None:
            continue
        a, b = part.lo, part.hi
        if p.form.is_flat:
            return 0.0
        if any(a <= s <= b for s in p.form.stationary_points()):
            return 0.0
        best = min(best, abs(float(p.form.derivative(a))), abs(float(p.form.derivative(b))))
    return best
