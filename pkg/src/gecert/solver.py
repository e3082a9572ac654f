"""Static solves, time sweeps and linking of samples into solution trajectories."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuit import GeneralizedEquation
from .errors import AmbiguousLink
from .setmap import TOL_Z, ValueSet, preimage, preimage_many

# The solution set S(t) over the abscissa has the same point/interval shape.
SolutionSet = ValueSet


@dataclass(frozen=True, eq=False)
class Grid:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("a grid needs at least two points")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("grid points must be strictly increasing")
        if pts[0] != 0.0 or pts[-1] != 1.0:
            raise ValueError("grid must span [0, 1]")
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, n: int) -> "Grid":
        return cls(np.linspace(0.0, 1.0, n))

    @property
    def count(self) -> int:
        return int(self.points.size)

    def __len__(self):
        return self.count


@dataclass(eq=False)
class Trajectory:
    branch_id: int
    ts: np.ndarray
    zs: np.ndarray
    indices: np.ndarray  # positions on the sweep grid

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.ts[0]), float(self.ts[-1])

    def __len__(self):
        return int(self.ts.size)


@dataclass(eq=False)
class TrajectoryBundle:
    trajectories: list[Trajectory]
    isolation_margin: float
    delta_link: float

    def __len__(self):
        return len(self.trajectories)

    def __getitem__(self, k):
        return self.trajectories[k]

    def by_id(self, branch_id: int) -> Trajectory:
        for tr in self.trajectories:
            if tr.branch_id == branch_id:
                return tr
        raise KeyError(branch_id)


def solve_static(eq: GeneralizedEquation, p_value: float, tol_z: float = TOL_Z) -> SolutionSet:
    """All z with p_value in f(z) + F(z)."""
    return preimage(eq.total, p_value, tol_z)


def sweep(eq: GeneralizedEquation, grid: Grid, tol_z: float = TOL_Z) -> list[SolutionSet]:
    return preimage_many(eq.total, eq.p.values(grid.points), tol_z)


def default_delta_link(sets: list[SolutionSet]) -> float:
    """A quarter of the smallest solution spacing at the first grid point with two or more solutions."""
    for s in sets:
        if len(s.points) >= 2:
            return 0.25 * float(np.min(np.diff(s.points)))
    return math.inf


def link_trajectories(sets: list[SolutionSet], grid: Grid, delta_link: float | None = None) -> TrajectoryBundle:
    """Greedy nearest-neighbour linking of consecutive solution sets.

    Continuum (interval) solutions are not linked.  A branch whose match
    disappears is closed at its last matched grid point.
    """
    if len(sets) != grid.count:
        raise ValueError("one solution set per grid point is required")
    if delta_link is None:
        delta_link = default_delta_link(sets)
    if not delta_link > 0:
        raise ValueError("delta_link must be positive")

    finished: list[tuple[list[int], list[float]]] = []
    active: list[tuple[list[int], list[float]]] = [([0], [z]) for z in sets[0].points]
    for i in range(1, len(sets)):
        pts = sets[i].points
        pairs = sorted(
            (abs(z - tr[1][-1]), a, j)
            for a, tr in enumerate(active)
            for j, z in enumerate(pts)
            if abs(z - tr[1][-1]) < delta_link
        )
        taken_a: dict[int, int] = {}
        taken_p: set[int] = set()
        for _, a, j in pairs:
            if a in taken_a or j in taken_p:
                continue
            taken_a[a] = j
            taken_p.add(j)
        for a, j in taken_a.items():
            last = active[a][1][-1]
            for k, z in enumerate(pts):
                if k not in taken_p and abs(z - last) < delta_link and abs(z - pts[j]) < delta_link:
                    raise AmbiguousLink(
                        f"t={grid.points[i]}: candidates {pts[j]} and {z} both within {delta_link} of {last}")
        nxt = []
        for a, tr in enumerate(active):
            if a in taken_a:
                tr[0].append(i)
                tr[1].append(pts[taken_a[a]])
                nxt.append(tr)
            else:
                finished.append(tr)
        for j, z in enumerate(pts):
            if j not in taken_p:
                nxt.append(([i], [z]))
        active = nxt
    finished.extend(active)
    finished.sort(key=lambda tr: (tr[0][0], tr[1][0]))
    trajectories = [
        Trajectory(k + 1, grid.points[np.array(idx)], np.array(zs, dtype=float), np.array(idx))
        for k, (idx, zs) in enumerate(finished)
    ]
    bundle = TrajectoryBundle(trajectories, math.inf, float(delta_link))
    bundle.isolation_margin = isolation_margin(bundle)
    return bundle


def isolation_margin(bundle: TrajectoryBundle) -> float:
    """Smallest gap between distinct trajectories at shared grid points."""
    if len(bundle.trajectories) < 2:
        return math.inf
    by_index: dict[int, list[float]] = {}
    for tr in bundle.trajectories:
        for i, z in zip(tr.indices.tolist(), tr.zs.tolist()):
            by_index.setdefault(i, []).append(z)
    best = math.inf
    for zs in by_index.values():
        if len(zs) > 1:
            best = min(best, float(np.min(np.diff(np.sort(zs)))))
    return best


def residual(eq: GeneralizedEquation, t: float, z: float) -> float:
    return eq.total.evaluate(z).distance(float(eq.p.values(np.array([t]))[0]))


def check_selection(traj: Trajectory, eq: GeneralizedEquation) -> float:
    """Largest residual dist(p(t), f(z(t)) + F(z(t))) along the trajectory."""
    ps = eq.p.values(traj.ts)
    G = eq.total
    return max(G.evaluate(float(z)).distance(float(p)) for z, p in zip(traj.zs, ps))
