"""Perturbed input signals: trajectory construction and the 4*a*eps/b deviation bound."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import GeneralizedEquation, Signal, signal_distance
from .errors import EpsilonTooLarge, GateViolation, GridMismatch, LocalizationError, WindowTooWide
from .regularity import AuxiliaryMap, SmrCertificate, UniformCertificate
from .setmap import TOL_Z, ValueSet, preimage_many
from .solver import Trajectory


@dataclass(frozen=True)
class PerturbationScenario:
    base: GeneralizedEquation
    p_tilde: Signal
    eps: float

    def gate(self, ucert: UniformCertificate) -> bool:
        return self.eps < ucert.b / 4.0


@dataclass(frozen=True)
class BoundReport:
    eps: float
    gate: float
    bound: float
    observed: float
    gate_ok: bool
    passed: bool


def perturbed_equation(eq: GeneralizedEquation, p_tilde: Signal) -> GeneralizedEquation:
    return eq.with_signal(p_tilde)


def perturbation_scenario(eq: GeneralizedEquation, p_tilde: Signal, grid=4096) -> PerturbationScenario:
    return PerturbationScenario(eq, p_tilde, signal_distance(eq.p, p_tilde, grid))


def perturbation_shift_check(eq: GeneralizedEquation, p_tilde: Signal, t: float, vs, ws=()) -> float:
    """Discrepancy in G~_t(v) = G_t(v) + p(t) - p~(t) and G~_t^{-1}(w) = G_t^{-1}(w + p~(t) - p(t))."""
    G = AuxiliaryMap(eq, t)
    Gp = AuxiliaryMap(perturbed_equation(eq, p_tilde), t)
    pt, qt = G.offset, Gp.offset
    worst = 0.0
    for v in vs:
        worst = max(worst, Gp(v).set_distance(G(v).shift(pt - qt)))
    if len(ws):
        ws = np.asarray(ws, dtype=float)
        for a, b in zip(Gp.inverse_many(ws), G.inverse_many(ws + qt - pt)):
            worst = max(worst, a.set_distance(b))
    return worst


def _localize(s: ValueSet, center: float, radius: float, t: float) -> float:
    inside = [x for x in s.points if abs(x - center) <= radius]
    touching = [iv for iv in s.intervals if iv[0] <= center + radius and iv[1] >= center - radius]
    if touching or len(inside) > 1:
        raise LocalizationError(f"localized inverse is multivalued at t={t}", t=t, count=len(inside) + len(touching))
    if not inside:
        raise LocalizationError(f"localized inverse is empty at t={t}", t=t, count=0)
    return inside[0]


def _check_gate(eps: float, ucert: UniformCertificate):
    if not eps < ucert.b / 4.0:
        raise GateViolation(f"eps = {eps:.6g} is not below b/4 = {ucert.b / 4.0:.6g}")


def construct_perturbed_trajectory(eq: GeneralizedEquation, traj: Trajectory, ucert: UniformCertificate,
                                   p_tilde: Signal, eps: float | None = None,
                                   enforce_gate: bool = True) -> Trajectory:
    """Pointwise construction z~(t) = G_t^{-1}(p~(t) - p(t)) intersected with B_a(z(t)).

    With ``enforce_gate=False`` the construction runs even when eps >= b/4;
    the result is then diagnostic only, since no bound is guaranteed.
    """
    if eps is None:
        eps = signal_distance(eq.p, p_tilde)
    if enforce_gate:
        _check_gate(eps, ucert)
    ps = eq.p.values(traj.ts)
    y0 = p_tilde.values(traj.ts) - ps
    sets = preimage_many(eq.total, ps + y0)
    zt = np.array([_localize(s, z, ucert.a, t) for s, z, t in zip(sets, traj.zs, traj.ts)])
    return Trajectory(traj.branch_id, traj.ts.copy(), zt, traj.indices.copy())


def perturbed_certificate(cert: SmrCertificate, eps: float) -> SmrCertificate:
    """Radii (a_t, b_t - eps) and the same modulus, valid for the perturbed auxiliary map."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if eps >= cert.b_t:
        raise EpsilonTooLarge(f"eps = {eps} is not below b_t = {cert.b_t}")
    return SmrCertificate(cert.t, cert.z, cert.a_t, cert.b_t - eps, cert.kappa_t)


def verify_deviation_bound(traj: Trajectory, z_tilde: Trajectory, ucert: UniformCertificate,
                           eps: float) -> BoundReport:
    if traj.ts.shape != z_tilde.ts.shape or not np.array_equal(traj.ts, z_tilde.ts):
        raise GridMismatch("trajectories are sampled on different grids")
    gate = ucert.b / 4.0
    bound = 4.0 * ucert.a * eps / ucert.b
    observed = float(np.max(np.abs(z_tilde.zs - traj.zs)))
    gate_ok = eps < gate
    # identical signals give a zero bound and a zero deviation
    within = observed < bound or (observed == 0.0 and bound == 0.0)
    return BoundReport(float(eps), gate, bound, observed, gate_ok, gate_ok and within)


def _window_ok(ts: np.ndarray, qs: np.ndarray, zs: np.ndarray, rho: float, a: float, b: float) -> bool:
    n = ts.size
    for k in range(1, n):
        close = (ts[k:] - ts[:-k]) < rho
        if not close.any():
            break
        if np.any(np.abs(qs[k:] - qs[:-k])[close] >= b / 4.0):
            return False
        if np.any(np.abs(zs[k:] - zs[:-k])[close] >= a / 2.0):
            return False
    return True


def choose_window_radius(traj: Trajectory, ucert: UniformCertificate, p_tilde: Signal,
                         start: float = 0.5, max_halvings: int = 60) -> float:
    """Largest rho = start / 2^k keeping |p~(tau) - p~(t)| < b/4 and |z(tau) - z(t)| < a/2 on every window."""
    qs = p_tilde.values(traj.ts)
    rho = start
    for _ in range(max_halvings):
        if _window_ok(traj.ts, qs, traj.zs, rho, ucert.a, ucert.b):
            return rho
        rho /= 2.0
    raise WindowTooWide("no window radius satisfies the continuity conditions")


def _window_centres(ts: np.ndarray, rho: float) -> list[int]:
    centres = [0]
    n = ts.size
    while True:
        c = centres[-1]
        hi = int(np.searchsorted(ts, ts[c] + rho, side="left")) - 1
        if hi >= n - 1:
            break
        centres.append(max(hi, c + 1))
    return centres


def method2_trajectory(eq: GeneralizedEquation, traj: Trajectory, ucert: UniformCertificate,
                       p_tilde: Signal, rho: float | None = None, eps: float | None = None,
                       enforce_gate: bool = True, tol_z: float = TOL_Z) -> Trajectory:
    """Construction over windows (t - rho, t + rho) anchored at window centres.

    On each window z~(tau) = G_t^{-1}(p~(tau) - p(t)) intersected with B_{a/2}(z(t)).
    Values on overlapping windows must agree within tol_z.
    """
    if eps is None:
        eps = signal_distance(eq.p, p_tilde)
    if enforce_gate:
        _check_gate(eps, ucert)
    ts, zs = traj.ts, traj.zs
    qs = p_tilde.values(ts)
    ps = eq.p.values(ts)
    if rho is None:
        rho = choose_window_radius(traj, ucert, p_tilde)
    elif not _window_ok(ts, qs, zs, rho, ucert.a, ucert.b):
        raise WindowTooWide(f"rho = {rho} violates the window conditions")

    values: dict[int, list[tuple[float, float]]] = {}
    for c in _window_centres(ts, rho):
        lo = int(np.searchsorted(ts, ts[c] - rho, side="right"))
        hi = int(np.searchsorted(ts, ts[c] + rho, side="left"))
        members = np.arange(lo, hi)
        targets = ps[c] + (qs[members] - ps[c])
        for j, s in zip(members.tolist(), preimage_many(eq.total, targets)):
            zj = _localize(s, zs[c], ucert.a / 2.0, float(ts[j]))
            values.setdefault(j, []).append((abs(ts[j] - ts[c]), zj))

    out = np.empty(ts.size)
    for j in range(ts.size):
        cands = values.get(j)
        if not cands:
            raise WindowTooWide(f"grid point t={ts[j]} is not covered by any window")
        zvals = [z for _, z in cands]
        if max(zvals) - min(zvals) > tol_z:
            raise LocalizationError(f"overlapping windows disagree at t={ts[j]}", t=float(ts[j]))
        out[j] = min(cands)[1]
    return Trajectory(traj.branch_id, ts.copy(), out, traj.indices.copy())


def max_deviation(a: Trajectory, b: Trajectory) -> float:
    return float(np.max(np.abs(a.zs - b.zs))) if len(a) else math.nan
