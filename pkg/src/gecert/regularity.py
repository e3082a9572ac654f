"""Strong metric regularity certificates for the auxiliary map G_t(v) = f(v) - p(t) + F(v)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuit import GeneralizedEquation
from .errors import EmptyInput, OnFold, RatioViolation
from .setmap import (
    TOL_Z,
    FoldPoint,
    ValueSet,
    fold_points,
    min_abs_slope,
    preimage_many,
)
from .solver import Trajectory

SAFETY = 0.95
MARGIN = 1.05
A_CAP = 1.0
B_CAP = 1.0e3


@dataclass(frozen=True)
class AuxiliaryMap:
    """v -> f(v) - p(t) + F(v) for a fixed t."""

    eq: GeneralizedEquation
    t: float

    @property
    def offset(self) -> float:
        return float(self.eq.p.values(np.array([self.t]))[0])

    def __call__(self, v: float) -> ValueSet:
        return self.eq.total.evaluate(v).shift(-self.offset)

    def inverse_many(self, ws) -> list[ValueSet]:
        return preimage_many(self.eq.total, self.offset + np.asarray(ws, dtype=float))

    def inverse(self, w: float) -> ValueSet:
        return self.inverse_many([w])[0]


@dataclass(frozen=True)
class SmrCertificate:
    t: float
    z: float
    a_t: float
    b_t: float
    kappa_t: float

    def __post_init__(self):
        if not (self.a_t > 0 and self.b_t > 0 and self.kappa_t > 0):
            raise ValueError(f"certificate radii and modulus must be positive: {self}")


@dataclass
class UniformCertificate:
    a: float
    b: float
    kappa: float
    partition: list[tuple[float, float, SmrCertificate]] = field(default_factory=list)
    a_over_kappa: float = math.nan
    min_b_t: float = math.nan

    def at(self, t: float, z: float) -> SmrCertificate:
        return SmrCertificate(t, z, self.a, self.b, self.kappa)


@dataclass
class LocalizationReport:
    single_valued: bool
    lipschitz_estimate: float
    failures: int
    passed: bool


def auxiliary_shift_check(eq: GeneralizedEquation, t: float, t2: float, vs: Sequence[float],
                          ws: Sequence[float] = ()) -> float:
    """Largest discrepancy in G_t(v) = G_t'(v) + p(t') - p(t) and its inverse form."""
    Gt, Gt2 = AuxiliaryMap(eq, t), AuxiliaryMap(eq, t2)
    pt, pt2 = Gt.offset, Gt2.offset
    worst = 0.0
    for v in vs:
        worst = max(worst, Gt(v).set_distance(Gt2(v).shift(pt2 - pt)))
    if len(ws):
        ws = np.asarray(ws, dtype=float)
        lhs = Gt.inverse_many(ws)
        rhs = Gt2.inverse_many(ws + pt - pt2)
        for a, b in zip(lhs, rhs):
            worst = max(worst, a.set_distance(b))
    return worst


def _bracketing_folds(folds: Sequence[FoldPoint], z: float) -> tuple[list[FoldPoint], list[FoldPoint]]:
    left = [f for f in folds if f.z < z]
    right = [f for f in folds if f.z > z]
    if left:
        zl = max(f.z for f in left)
        left = [f for f in left if f.z == zl]
    if right:
        zr = min(f.z for f in right)
        right = [f for f in right if f.z == zr]
    return left, right


def smr_pointwise(eq: GeneralizedEquation, t: float, z: float, *, folds: Sequence[FoldPoint] | None = None,
                  safety: float = SAFETY, margin: float = MARGIN, a_cap: float = A_CAP,
                  b_cap: float = B_CAP, tol_z: float = TOL_Z) -> SmrCertificate:
    """Pointwise certificate (a_t, b_t, kappa_t) at a solution z of G_t(z) containing 0.

    a_t keeps the ball clear of the nearest fold abscissas, b_t keeps the
    ordinate window clear of the bracketing fold ordinates and is capped by
    a_t / kappa_t so the localized inverse cannot leave the ball.
    """
    G = eq.total
    if folds is None:
        folds = fold_points(G)
    for x in G.boundaries():
        if abs(z - x) <= tol_z:
            raise OnFold(f"z={z} sits on a kink or segment abscissa at {x}")
    for f in folds:
        if abs(z - f.z) <= tol_z:
            raise OnFold(f"z={z} is a fold point")
    if G.piece_at(z) is None:
        raise OnFold(f"z={z} is not on a function piece")

    left, right = _bracketing_folds(folds, z)
    dist = z - left[0].z if left else math.inf
    if right:
        dist = min(dist, right[0].z - z)
    a_t = min(safety * dist, a_cap)

    slope = min_abs_slope(G, z - a_t, z + a_t)
    if not slope > 0:
        raise OnFold(f"derivative of f + F vanishes near z={z}")
    kappa_t = margin / slope

    p_t = float(eq.p.values(np.array([t]))[0])
    gaps = [abs(f.y - p_t) for f in left + right]
    b_fold = safety * min(gaps) if gaps else math.inf
    b_t = min(b_fold, b_cap, a_t / kappa_t)
    if not b_t > 0:
        raise OnFold(f"p(t)={p_t} coincides with a fold ordinate")
    return SmrCertificate(float(t), float(z), float(a_t), float(b_t), float(kappa_t))


def certify_trajectory(eq: GeneralizedEquation, traj: Trajectory, **kwargs) -> list[SmrCertificate]:
    folds = fold_points(eq.total)
    return [smr_pointwise(eq, float(t), float(z), folds=folds, **kwargs) for t, z in zip(traj.ts, traj.zs)]


def reduce_radii(cert: SmrCertificate, a_new: float, b_new: float) -> SmrCertificate:
    if not (0 < a_new <= cert.a_t and 0 < b_new <= cert.b_t):
        raise ValueError("reduced radii must be positive and no larger than the originals")
    if cert.kappa_t * b_new > a_new:
        raise RatioViolation(f"kappa*b' = {cert.kappa_t * b_new} exceeds a' = {a_new}")
    return SmrCertificate(cert.t, cert.z, a_new, b_new, cert.kappa_t)


def uniform_certificate(certs: Sequence[SmrCertificate]) -> UniformCertificate:
    """kappa = max kappa_t, a = min a_t, b = min(a / kappa, min b_t) over the grid partition."""
    if not certs:
        raise EmptyInput("no certificates to aggregate")
    kappa = max(c.kappa_t for c in certs)
    a = min(c.a_t for c in certs)
    min_b = min(c.b_t for c in certs)
    b = min(a / kappa, min_b)
    ts = [c.t for c in certs] + [certs[-1].t]
    partition = [(ts[i], ts[i + 1], c) for i, c in enumerate(certs)]
    return UniformCertificate(a, b, kappa, partition, a / kappa, min_b)


def verify_localization(eq: GeneralizedEquation, cert: SmrCertificate, n_samples: int = 256) -> LocalizationReport:
    """Sample y in [-b, b] and check that G_t^{-1}(y) meets B_a(z) in exactly one point.

    The Lipschitz estimate is the largest slope between neighbouring samples,
    which in one dimension equals the largest slope over all sample pairs.
    """
    ys = np.linspace(-cert.b_t, cert.b_t, n_samples)
    p_t = float(eq.p.values(np.array([cert.t]))[0])
    sets = preimage_many(eq.total, p_t + ys)
    zs = np.full(n_samples, np.nan)
    failures = 0
    for i, s in enumerate(sets):
        inside = [x for x in s.points if abs(x - cert.z) <= cert.a_t]
        touching = [iv for iv in s.intervals if iv[0] <= cert.z + cert.a_t and iv[1] >= cert.z - cert.a_t]
        if len(inside) == 1 and not touching:
            zs[i] = inside[0]
        else:
            failures += 1
    ok = np.isfinite(zs)
    both = ok[1:] & ok[:-1]
    slopes = np.abs(np.diff(zs)) / np.diff(ys)
    estimate = float(np.max(slopes[both])) if both.any() else math.nan
    single = failures == 0
    passed = single and not (estimate > cert.kappa_t)
    return LocalizationReport(single, estimate, failures, passed)


def continuity_check(traj: Trajectory, p, certs) -> float:
    """Largest excess of |z(t) - z(tau)| over kappa_t |p(t) - p(tau)| on adjacent grid pairs.

    ``certs`` is a per-sample certificate list, a UniformCertificate or a bare modulus.
    """
    ps = p.values(traj.ts)
    if isinstance(certs, UniformCertificate):
        kap = np.full(len(traj.ts) - 1, certs.kappa)
    elif isinstance(certs, (int, float)):
        kap = np.full(len(traj.ts) - 1, float(certs))
    else:
        kap = np.array([c.kappa_t for c in certs[:-1]])
    jumps = np.abs(np.diff(traj.zs))
    allowed = kap * np.abs(np.diff(ps))
    if jumps.size == 0:
        return 0.0
    return float(max(0.0, np.max(jumps - allowed)))
