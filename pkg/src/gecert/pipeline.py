"""Orchestration sweep -> certify -> perturb, with deterministic CSV and JSON output."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import GeneralizedEquation, signal_distance
from .errors import EpsilonTooLarge, GecertError, LocalizationError, OnFold, WindowTooWide
from .perturb import (
    choose_window_radius,
    construct_perturbed_trajectory,
    method2_trajectory,
    perturbed_certificate,
    perturbed_equation,
    verify_deviation_bound,
)
from .regularity import (
    SmrCertificate,
    UniformCertificate,
    continuity_check,
    smr_pointwise,
    uniform_certificate,
    verify_localization,
)
from .scenario import Scenario
from .setmap import fold_points
from .solver import Grid, Trajectory, TrajectoryBundle, check_selection, link_trajectories, sweep

log = logging.getLogger(__name__)

STAGES = ("sweep", "certify", "perturb")
EXIT_OK, EXIT_VERIFY, EXIT_INPUT = 0, 1, 2

B_NOTE = ("b = min(a/kappa, min_t b_t). Both terms are reported separately because quoted reference "
          "values for b may come from either term, or from a/(2 kappa).")
AGREEMENT_TOL = 1e-10


@dataclass
class RunReport:
    data: dict = field(default_factory=dict)
    checks: dict[str, bool] = field(default_factory=dict)
    files: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.passed else EXIT_VERIFY

    def to_json(self) -> str:
        body = dict(self.data)
        body["checks"] = dict(self.checks)
        body["passed"] = self.passed
        body["exit_code"] = self.exit_code
        return json.dumps(_jsonable(body), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _num(x) -> str:
    # repr gives the shortest string that round-trips
    return repr(float(x)) if not isinstance(x, (int, np.integer)) else str(int(x))


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_num(v) for v in row])


# -- stages ----------------------------------------------------------------------

@dataclass
class _State:
    scenario: Scenario
    eq: GeneralizedEquation
    grid: Grid
    bundle: TrajectoryBundle | None = None
    target: Trajectory | None = None
    certs: list[SmrCertificate] = field(default_factory=list)
    ucert: UniformCertificate | None = None
    z_tilde: Trajectory | None = None


def _sweep_stage(st: _State, rep: RunReport, out: Path | None) -> None:
    tol = st.scenario.tolerances
    sets = sweep(st.eq, st.grid, tol.tol_z)
    bundle = link_trajectories(sets, st.grid, tol.delta_link)
    st.bundle = bundle
    residuals = [check_selection(tr, st.eq) for tr in bundle.trajectories]
    continuum = sum(1 for s in sets if s.intervals)
    rep.data["trajectories"] = {
        "count": len(bundle),
        "isolation_margin": bundle.isolation_margin,
        "delta_link": bundle.delta_link,
        "continuum_samples": continuum,
        "max_residual": max(residuals, default=0.0),
        "branches": [
            {"branch_id": tr.branch_id, "samples": len(tr), "t_range": list(tr.domain),
             "z_range": [float(tr.zs.min()), float(tr.zs.max())]}
            for tr in bundle.trajectories
        ],
    }
    rep.checks["selection_residual"] = all(r <= tol.tol_res for r in residuals)
    if out is not None:
        rows = sorted(((t, tr.branch_id, z) for tr in bundle.trajectories for t, z in zip(tr.ts, tr.zs)),
                      key=lambda r: (r[0], r[2], r[1]))
        _write_csv(out / "trajectories.csv", ["t", "branch_id", "z"], rows)
        rep.files.append("trajectories.csv")


def _certify_branch(eq: GeneralizedEquation, tr: Trajectory, tol_z: float):
    folds = fold_points(eq.total)
    certs, skipped = [], 0
    for t, z in zip(tr.ts, tr.zs):
        try:
            certs.append(smr_pointwise(eq, float(t), float(z), folds=folds, tol_z=tol_z))
        except OnFold:
            skipped += 1
    return certs, skipped


def _certify_stage(st: _State, rep: RunReport, out: Path | None) -> None:
    scn, tol = st.scenario, st.scenario.tolerances
    bundle = st.bundle
    chosen, certs, skipped = None, [], 0
    if scn.target_branch is not None:
        try:
            chosen = bundle.by_id(scn.target_branch)
        except KeyError:
            rep.data["certificate"] = {"status": f"target branch {scn.target_branch} does not exist"}
            rep.checks["target_branch_exists"] = False
            return
        certs, skipped = _certify_branch(st.eq, chosen, tol.tol_z)
    else:
        # first branch that certifies at every sample, else the one with most certified samples
        best = None
        for tr in bundle.trajectories:
            c, s = _certify_branch(st.eq, tr, tol.tol_z)
            if s == 0:
                best = (tr, c, s)
                break
            if best is None or len(c) > len(best[1]):
                best = (tr, c, s)
        if best is not None:
            chosen, certs, skipped = best
    st.target, st.certs = chosen, certs

    reports = [verify_localization(st.eq, c, tol.samples) for c in certs]
    info = {
        "branch_id": None if chosen is None else chosen.branch_id,
        "certified_samples": len(certs),
        "uncertifiable_samples": skipped,
        "localization_failures": sum(1 for r in reports if not r.passed),
        "max_lipschitz_ratio": max((r.lipschitz_estimate / c.kappa_t for r, c in zip(reports, certs)
                                    if math.isfinite(r.lipschitz_estimate)), default=0.0),
    }
    rep.checks["localization"] = info["localization_failures"] == 0
    if certs and skipped == 0:
        uc = uniform_certificate(certs)
        st.ucert = uc
        info.update({"status": "certified", "a": uc.a, "b": uc.b, "kappa": uc.kappa,
                     "a_over_kappa": uc.a_over_kappa, "min_b_t": uc.min_b_t, "b_note": B_NOTE})
        excess = continuity_check(chosen, st.eq.p, uc)
        info["continuity_excess"] = excess
        rep.checks["continuity"] = excess <= tol.tol_z
    else:
        # fold or segment points on every branch: regularity does not hold there, which is not an error
        info["status"] = "uncertifiable" if not certs else "partially certified"
    rep.data["certificate"] = info
    if out is not None:
        _write_csv(out / "certificate.csv", ["t", "z", "a_t", "b_t", "kappa_t"],
                   ((c.t, c.z, c.a_t, c.b_t, c.kappa_t) for c in certs))
        rep.files.append("certificate.csv")
        if st.ucert is not None:
            _write_csv(out / "uniform.csv", ["a", "b", "kappa"], [(st.ucert.a, st.ucert.b, st.ucert.kappa)])
            rep.files.append("uniform.csv")


def _perturb_stage(st: _State, rep: RunReport, out: Path | None) -> None:
    scn, tol = st.scenario, st.scenario.tolerances
    q = scn.perturbed_signal()
    if q is None:
        rep.data["perturbation"] = {"status": "skipped: no perturbed source"}
        return
    uc, traj = st.ucert, st.target
    if uc is None:
        rep.data["perturbation"] = {"status": "no uniform certificate for the target branch"}
        rep.checks["perturbation_certified"] = False
        return
    eps = signal_distance(st.eq.p, q)
    gate_ok = eps < uc.b / 4.0
    info: dict = {"eps": eps, "gate": uc.b / 4.0, "gate_ok": gate_ok,
                  "status": "ok" if gate_ok else "gate-violation"}
    rep.checks["gate"] = gate_ok
    eq_q = perturbed_equation(st.eq, q)
    try:
        z1 = construct_perturbed_trajectory(st.eq, traj, uc, q, eps, enforce_gate=False)
    except LocalizationError as exc:
        info["method1_error"] = str(exc)
        rep.checks["method1"] = False
        rep.data["perturbation"] = info
        return
    br = verify_deviation_bound(traj, z1, uc, eps)
    info.update({"bound": br.bound, "observed": br.observed, "bound_pass": br.passed})
    rep.checks["deviation_bound"] = br.passed
    info["perturbed_residual"] = check_selection(z1, eq_q)
    rep.checks["perturbed_residual"] = info["perturbed_residual"] <= tol.tol_res
    info["perturbed_continuity_excess"] = continuity_check(z1, q, uc)
    if gate_ok:
        rep.checks["perturbed_continuity"] = info["perturbed_continuity_excess"] <= tol.tol_z
        fails = 0
        for c in st.certs:
            try:
                pc = perturbed_certificate(c, eps)
            except EpsilonTooLarge:
                fails += 1
                continue
            # G~_t^{-1} stays localized around (z(t), 0) with the ordinate radius shrunk by eps
            if not verify_localization(eq_q, pc, tol.samples).passed:
                fails += 1
        info["perturbed_certificate_failures"] = fails
        rep.checks["perturbed_certificates"] = fails == 0
    try:
        rho = choose_window_radius(traj, uc, q)
        z2 = method2_trajectory(st.eq, traj, uc, q, rho=rho, eps=eps, enforce_gate=False, tol_z=AGREEMENT_TOL)
        info["rho"] = rho
        info["method_agreement"] = float(np.max(np.abs(z1.zs - z2.zs)))
        rep.checks["method_agreement"] = info["method_agreement"] <= AGREEMENT_TOL
    except (WindowTooWide, LocalizationError) as exc:
        info["method2_error"] = str(exc)
        rep.checks["method_agreement"] = False
    if not gate_ok:
        info["note"] = "eps >= b/4: trajectories are diagnostic only and carry no guarantee"
    rep.data["perturbation"] = info
    if out is not None:
        _write_csv(out / "perturbed.csv", ["t", "branch_id", "z", "z_tilde", "deviation"],
                   ((t, traj.branch_id, z, zt, abs(zt - z)) for t, z, zt in zip(traj.ts, traj.zs, z1.zs)))
        rep.files.append("perturbed.csv")
    st.z_tilde = z1


def _plot(st: _State, out: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "gecert"
    fig, ax = plt.subplots(figsize=(7, 4))
    for tr in st.bundle.trajectories:
        ax.plot(tr.ts, tr.zs, label=f"branch {tr.branch_id}")
    zt = st.z_tilde
    if zt is not None:
        ax.plot(zt.ts, zt.zs, "--", label="perturbed")
    ax.set_xlabel("t")
    ax.set_ylabel("z")
    ax.legend()
    fig.savefig(out / "trajectories.svg", metadata={"Date": None})
    plt.close(fig)


def run(scenario: Scenario, stages=STAGES, out_dir: str | Path | None = None, plot: bool = False) -> RunReport:
    """Run the requested stages; perturb needs certify and certify needs sweep."""
    stages = tuple(s for s in STAGES if s in set(stages))
    if "perturb" in stages and "certify" not in stages or "certify" in stages and "sweep" not in stages:
        raise ValueError("perturb requires certify, certify requires sweep")
    out = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
    st = _State(scenario, scenario.equation(), Grid.uniform(scenario.grid))
    rep = RunReport()
    rep.data.update({"version": __version__, "stages": list(stages),
                     "scenario": {"name": scenario.name, "digest": scenario.digest(), "grid": scenario.grid}})
    if "sweep" in stages:
        _sweep_stage(st, rep, out)
    if "certify" in stages:
        _certify_stage(st, rep, out)
    if "perturb" in stages:
        _perturb_stage(st, rep, out)
    if out is not None:
        if plot and st.bundle is not None:
            _plot(st, out)
            rep.files.append("trajectories.svg")
        rep.files.append("report.json")
        rep.data["files"] = sorted(rep.files)
        (out / "report.json").write_text(rep.to_json(), encoding="utf-8")
    log.info("run %s: %s", scenario.name, "pass" if rep.passed else "fail")
    return rep


__all__ = ["RunReport", "run", "STAGES", "EXIT_OK", "EXIT_VERIFY", "EXIT_INPUT", "GecertError"]
