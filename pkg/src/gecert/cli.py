"""Command line front end.

    gecert solve   --scenario NAME --p VALUE
    gecert sweep   --scenario NAME [--out DIR]
    gecert certify --scenario NAME [--out DIR]
    gecert perturb --scenario NAME [--out DIR]
    gecert run     --scenario NAME [--out DIR] [--plot]

Exit status: 0 when every enabled verification passes, 1 on a
verification failure, 2 on bad input.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import AmbiguousLink, GecertError, ScenarioError
from .pipeline import EXIT_INPUT, EXIT_OK, run
from .scenario import BUNDLED, Scenario, load_scenario
from .solver import solve_static

STAGES_FOR = {
    "sweep": ("sweep",),
    "certify": ("sweep", "certify"),
    "perturb": ("sweep", "certify", "perturb"),
    "run": ("sweep", "certify", "perturb"),
}


def _positive(kind):
    def conv(text):
        v = kind(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"expected a positive value, got {text}")
        return v
    return conv


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True,
                        help=f"scenario JSON path or bundled name ({', '.join(BUNDLED)})")
    common.add_argument("--grid", type=_positive(int), help="number of grid points on [0, 1]")
    common.add_argument("--out", help="output directory (default: the scenario's outputs field)")
    common.add_argument("--plot", action="store_true", help="also write trajectories.svg")
    common.add_argument("--tol-res", type=_positive(float))
    common.add_argument("--tol-z", type=_positive(float))
    common.add_argument("--delta-link", type=_positive(float))
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="gecert", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    solve = sub.add_parser("solve", parents=[common], help="static solution set for one source value")
    solve.add_argument("--p", type=float, required=True, help="source value in volts")
    for name, text in (("sweep", "sweep the grid and link trajectories"),
                       ("certify", "sweep, then certify the target branch"),
                       ("perturb", "sweep, certify and check the perturbed trajectory"),
                       ("run", "all stages")):
        sub.add_parser(name, parents=[common], help=text)
    return parser


def _apply_overrides(scn: Scenario, args) -> Scenario:
    tol = {k: v for k, v in (("tol_res", args.tol_res), ("tol_z", args.tol_z),
                             ("delta_link", args.delta_link)) if v is not None}
    update = {}
    if tol:
        update["tolerances"] = scn.tolerances.model_copy(update=tol)
    if args.grid is not None:
        if args.grid < 2:
            raise ScenarioError("--grid must be at least 2")
        update["grid"] = args.grid
    return scn.model_copy(update=update) if update else scn


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        scn = _apply_overrides(load_scenario(args.scenario), args)
        if args.command == "solve":
            sol = solve_static(scn.equation(), args.p, scn.tolerances.tol_z)
            print(json.dumps({"p": args.p, "points": list(sol.points),
                              "intervals": [list(iv) for iv in sol.intervals]}))
            return EXIT_OK
        report = run(scn, STAGES_FOR[args.command], args.out or scn.outputs, plot=args.plot)
    except (ScenarioError, AmbiguousLink) as exc:
        print(f"gecert: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except GecertError as exc:
        print(f"gecert: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    failed = [k for k, ok in sorted(report.checks.items()) if not ok]
    print(f"{scn.name}: {'pass' if not failed else 'FAIL (' + ', '.join(failed) + ')'}")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
