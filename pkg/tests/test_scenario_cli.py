import json

import numpy as np
import pytest

from gecert import cli
from gecert.circuit import Diac, Resistor
from gecert.errors import ScenarioError
from gecert.pipeline import run
from gecert.scenario import BUNDLED, bundled_text, load_scenario, parse_scenario

from oracles import regulator_S

MINIMAL = {"components": [{"kind": "resistor", "R": 10.0}], "source": {"dc": 1.0}, "grid": 8}


def test_bundled_diac_is_the_example_circuit():
    scn = load_scenario("diac_example")
    comps = [c.build() for c in scn.components]
    assert comps == [Resistor(220.0), Diac(0.1)]
    assert scn.source.dc == 28.0 and scn.source.sinusoids[0].amplitude == 2.5


def test_unknown_key_is_named():
    bad = dict(MINIMAL, colour="red")
    with pytest.raises(ScenarioError, match="colour"):
        parse_scenario(json.dumps(bad))
    bad = dict(MINIMAL, components=[{"kind": "resistor", "R": 1.0, "watts": 2}])
    with pytest.raises(ScenarioError, match=r"components\[0\]"):
        parse_scenario(json.dumps(bad))


def test_empty_components_rejected():
    with pytest.raises(ScenarioError, match="components"):
        parse_scenario(json.dumps(dict(MINIMAL, components=[])))


def test_syntax_error_has_position():
    with pytest.raises(ScenarioError, match="line 2, column"):
        parse_scenario('{"grid": 4,\n  oops}')


def test_semantic_errors():
    with pytest.raises(ScenarioError):
        parse_scenario(json.dumps(dict(MINIMAL, grid=1)))
    two = dict(MINIMAL, components=[{"kind": "diac"}, {"kind": "practical_diode", "v_f": 1, "v_b": 1}])
    with pytest.raises(ScenarioError):
        parse_scenario(json.dumps(two))
    sin = dict(MINIMAL, source={"sinusoids": [{"amplitude": 1.0}]})
    with pytest.raises(ScenarioError, match="omega or cycles"):
        parse_scenario(json.dumps(sin))


def test_custom_zener_graph():
    graph = {"pieces": [{"hi": 0.0, "intercept": -4.0}, {"lo": 0.0, "slope": 2.0, "intercept": 0.6}],
             "segments": [{"z": 0.0, "lo": -4.0, "hi": 0.6}]}
    scn = parse_scenario(json.dumps(dict(MINIMAL, components=[{"kind": "resistor", "R": 10.0},
                                                              {"kind": "zener", "graph": graph}])))
    assert scn.equation().total.evaluate(0.0).intervals == ((-4.0, 0.6),)
    broken = {"pieces": [{"hi": -1.0}, {"lo": 0.0}], "segments": []}
    with pytest.raises(ScenarioError):
        parse_scenario(json.dumps(dict(MINIMAL, components=[{"kind": "zener", "graph": broken}])))


def test_scenario_without_perturbation_skips_the_stage(tmp_path):
    rep = run(parse_scenario(json.dumps(MINIMAL)), out_dir=tmp_path)
    assert rep.exit_code == 0
    assert rep.data["perturbation"]["status"].startswith("skipped")
    assert not (tmp_path / "perturbed.csv").exists()


def test_stage_prerequisites():
    with pytest.raises(ValueError):
        run(parse_scenario(json.dumps(MINIMAL)), stages=("certify",))


def test_regulator_sweep_only(tmp_path):
    scn = load_scenario("regulator_sine")
    rep = run(scn, stages=("sweep",), out_dir=tmp_path)
    assert rep.exit_code == 0
    lines = (tmp_path / "trajectories.csv").read_text().splitlines()
    assert lines[0] == "t,branch_id,z"
    rows = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    p = 2.0 + 3.0 * np.sin(2 * np.pi * rows[:, 0])
    ref = np.array([regulator_S(v, 100.0, 0.7, 5.0) for v in p])
    assert np.max(np.abs(rows[:, 2] - ref)) <= 1e-12
    assert not (tmp_path / "certificate.csv").exists()


def test_csv_headers(tmp_path):
    assert cli.main(["run", "--scenario", "diac_perturbed", "--out", str(tmp_path), "--grid", "256"]) == 0
    heads = {f: (tmp_path / f).read_text().splitlines()[0] for f in
             ("trajectories.csv", "certificate.csv", "uniform.csv", "perturbed.csv")}
    assert heads == {"trajectories.csv": "t,branch_id,z", "certificate.csv": "t,z,a_t,b_t,kappa_t",
                     "uniform.csv": "a,b,kappa", "perturbed.csv": "t,branch_id,z,z_tilde,deviation"}
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["passed"] and report["scenario"]["grid"] == 256


def test_forced_gate_failure_exits_one(tmp_path):
    text = json.loads(bundled_text("diac_perturbed"))
    text["perturbed_source"] = {"dc": 27.0, "sinusoids": [{"amplitude": 2.5, "omega": 4 * np.pi}]}
    path = tmp_path / "s.json"
    path.write_text(json.dumps(text))
    assert cli.main(["perturb", "--scenario", str(path), "--out", str(tmp_path / "o"), "--grid", "256"]) == 1
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["perturbation"]["status"] == "gate-violation"
    assert report["exit_code"] == 1


def test_input_errors_exit_two(tmp_path, capsys):
    assert cli.main(["sweep", "--scenario", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert cli.main(["sweep", "--scenario", str(bad)]) == 2
    assert "input error" in capsys.readouterr().err


def test_solve_subcommand(capsys):
    assert cli.main(["solve", "--scenario", "diac_example", "--p", "28"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert len(out["points"]) == 3 and out["intervals"] == []


def test_overrides_apply(tmp_path):
    assert cli.main(["sweep", "--scenario", "zener_static", "--out", str(tmp_path), "--grid", "5",
                     "--tol-res", "1e-9", "--tol-z", "1e-13", "--delta-link", "0.5"]) == 0
    assert len((tmp_path / "trajectories.csv").read_text().splitlines()) == 6


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_exit_codes(name, tmp_path):
    # the full example perturbation violates the gate under the computed constants
    expected = 1 if name == "diac_example" else 0
    assert cli.main(["run", "--scenario", name, "--out", str(tmp_path)]) == expected
