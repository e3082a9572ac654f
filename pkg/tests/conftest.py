import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gecert.circuit import Diac, Resistor, Signal, Sinusoid, compose_series  # noqa: E402
from gecert.regularity import certify_trajectory, uniform_certificate  # noqa: E402
from gecert.solver import Grid, link_trajectories, sweep  # noqa: E402

OMEGA = 4.0 * math.pi

# acceptance lines collected by test_acceptance.py, printed at the end of the session
ACCEPTANCE_LINES: dict[int, list[tuple[bool, str]]] = {}


def record(criterion: int, ok: bool, text: str) -> None:
    ACCEPTANCE_LINES.setdefault(criterion, []).append((bool(ok), text))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        parts = ACCEPTANCE_LINES[k]
        ok = all(p for p, _ in parts)
        detail = "; ".join(("" if p else "[fail] ") + t for p, t in parts)
        tr.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")


@pytest.fixture(scope="session")
def p_nominal():
    return Signal(28.0, (Sinusoid(2.5, OMEGA),))


@pytest.fixture(scope="session")
def p_perturbed():
    return Signal(27.83, (Sinusoid(2.4, OMEGA, math.pi / 64),))


@pytest.fixture(scope="session")
def diac_eq(p_nominal):
    return compose_series([Resistor(220.0), Diac(0.1)], p_nominal)


@pytest.fixture(scope="session")
def diac_grid():
    return Grid.uniform(1024)


@pytest.fixture(scope="session")
def diac_bundle(diac_eq, diac_grid):
    return link_trajectories(sweep(diac_eq, diac_grid), diac_grid)


@pytest.fixture(scope="session")
def diac_z2(diac_bundle):
    return diac_bundle.by_id(2)


@pytest.fixture(scope="session")
def diac_certs(diac_eq, diac_z2):
    return certify_trajectory(diac_eq, diac_z2)


@pytest.fixture(scope="session")
def diac_ucert(diac_certs):
    return uniform_certificate(diac_certs)
