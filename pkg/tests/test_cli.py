import json

import pytest

from reconfcheck.cli import main
from reconfcheck.domain import Params
from reconfcheck.families import wall_cantilever
from reconfcheck.jacobi import SolverSettings
from reconfcheck.pipeline import EXIT_BOTH, EXIT_OVERLOAD, EXIT_SAFE, EXIT_UNSTABLE, exit_code
from reconfcheck.scenario import dump, from_configuration

from conftest import ROOT, scenario_path

GOLDEN = ROOT / "tests" / "golden"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, out


def test_exit_code_table():
    assert exit_code(True, False) == EXIT_SAFE == 0
    assert exit_code(False, False) == EXIT_UNSTABLE == 2
    assert exit_code(True, True) == EXIT_OVERLOAD == 3
    assert exit_code(False, True) == EXIT_BOTH == 4


def test_golden_report(capsys):
    code, out = run(capsys, "check", "--scenario", scenario_path("basic", "chain-8"), "--seed", 3)
    assert code == 0
    assert out == (GOLDEN / "chain-8.json").read_text()


def test_single_module(capsys):
    code, out = run(capsys, "check", "--scenario", scenario_path("basic", "single"), "--verify")
    rep = json.loads(out)
    assert code == 0
    assert rep["messages"]["total"] == 0
    assert rep["verify"]["relative_error"] < 1e-12
    assert rep["overload"]["max_utilization"] is None


def test_unstable_exit(capsys, tmp_path):
    trace = tmp_path / "trace.jsonl"
    code, out = run(capsys, "check", "--scenario", scenario_path("basic", "tower-overhang"),
                    "--simplified-stability", "--trace", trace)
    rep = json.loads(out)
    assert code == 2
    assert rep["stability"]["method"] == "simplified"
    assert [c["verdict"] for c in rep["stability_checks"]] == ["unstable", "unstable"]
    assert rep["module_flags"] == {"0": ["unstable"]}
    lines = trace.read_text().splitlines()
    assert len(lines) == rep["messages"]["total"]
    assert json.loads(lines[0])["phase"] == "tree"


def test_overload_and_both_exits(capsys, tmp_path):
    text = scenario_path("basic", "tower-overhang").read_text()
    weak = tmp_path / "weak.yaml"
    weak.write_text(text.replace("centroid: 0", "centroid: 0\nparams: {strength_vertical: 0.5, strength_lateral: 0.5}"))
    code, out = run(capsys, "check", "--scenario", weak)
    assert code == 4
    arm = from_configuration(wall_cantilever(2, Params(strength_lateral=1.0)), "arm",
                             SolverSettings(max_iterations=3000))
    safe = tmp_path / "arm.yaml"
    safe.write_text(dump(arm))
    code, out = run(capsys, "check", "--scenario", safe, "--csv", tmp_path / "c.csv")
    assert code == 3
    rep = json.loads(out)
    assert rep["overload"]["witness"] == [0, 1]
    assert "overload" in rep["module_flags"]["0"]
    assert (tmp_path / "c.csv").read_text().startswith("p,q,orientation")


def test_timing_flag(capsys):
    _, out = run(capsys, "check", "--scenario", scenario_path("basic", "single"), "--timing")
    assert "wall_time_s" in json.loads(out)
    _, out = run(capsys, "check", "--scenario", scenario_path("basic", "single"))
    assert "wall_time_s" not in json.loads(out)


def test_convergence_log(capsys, tmp_path):
    log = tmp_path / "conv.csv"
    run(capsys, "check", "--scenario", scenario_path("basic", "chain-8"), "--convergence", log,
        "--iterations", 200)
    rows = log.read_text().splitlines()
    assert rows[0] == "round,residual,state_changes"
    assert [int(r.split(",")[0]) for r in rows[1:]] == [0, 50, 100, 150]


@pytest.mark.parametrize("policy", ["random", "sync"])
def test_trace_command(capsys, policy):
    code, out = run(capsys, "trace", "--scenario", scenario_path("suite", "slab-3x3-virtual"),
                    "--policy", policy, "--fidelity-bb1")
    summary = json.loads(out)
    assert code == 0
    assert all(summary["checks"].values())
    assert summary["frames"] > summary["inter_module"]


def test_scaling_command(capsys):
    code, out = run(capsys, "scaling", "--family", "chain", "--sizes", "3-5", "--tolerances", "1e-3")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "family,size,tolerance,iterations"
    assert len(lines) == 5 and lines[-1].startswith("# exponent")


def test_bad_inputs_exit_1(capsys, tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("id: x\nmodules: []\ncentroid: 0\nspeed: 3\n")
    assert main(["check", "--scenario", str(bad)]) == 1
    assert "line 4" in capsys.readouterr().err
    assert main(["check", "--scenario", str(tmp_path / "missing.yaml")]) == 1
    assert main(["check", "--scenario", str(scenario_path("basic", "single")), "--beta", "3"]) == 1
    assert main(["check", "--scenario", str(scenario_path("overload", "cantilever-4")),
                 "--simplified-stability", "--iterations", "1"]) == 1
