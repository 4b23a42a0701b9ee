import json
import subprocess
import sys

import pytest

from scabstract.cli import main
from scabstract.project import FIXTURES, fixture_text

A_TRACE = "takeRoad(123,Rd_a,W,L1),takeRoad(123,Rd_b,L1,L2)"
GOAL = "Delivered(123)"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_validate(capsys, name):
    code, out, _ = run(capsys, "validate", "--fixture", name)
    assert code == 0 and out.startswith("VALID")


def test_files_instead_of_fixture(capsys, tmp_path):
    paths = []
    for f in FIXTURES["logistics"]:
        path = tmp_path / f
        path.write_text(fixture_text(f))
        paths.append(str(path))
    code, out, _ = run(capsys, "check-sound", "--hl", paths[0], "--ll", paths[1], "--map", paths[2])
    assert code == 0 and out.splitlines()[0] == "SOUND"


def test_soundness_and_completeness_verdicts(capsys):
    code, out, _ = run(capsys, "check-sound", "--fixture", "logistics", "--method", "both")
    assert (code, out.splitlines()[0]) == (0, "SOUND")
    code, out, _ = run(capsys, "check-complete", "--fixture", "logistics")
    assert (code, out.splitlines()[0]) == (1, "NOT COMPLETE")
    assert "~Priority(123)" in out
    code, out, _ = run(capsys, "check-complete", "--fixture", "logistics-repaired")
    assert (code, out.splitlines()[0]) == (0, "COMPLETE")
    code, out, _ = run(capsys, "check-sound", "--fixture", "abpqr", "--method", "bisimulation")
    assert (code, out.splitlines()[0]) == (1, "NOT SOUND")


def test_plan_and_refine(capsys):
    code, out, _ = run(capsys, "plan", "--fixture", "logistics", "--goal", GOAL)
    assert code == 0
    assert out.splitlines() == ["PLAN (3 steps)", "  1. takeRoute(123,Rt_A,W,L2)",
                                "  2. takeRoute(123,Rt_C,L2,Cf)", "  3. deliver(123)"]
    code, out, _ = run(capsys, "refine", "--fixture", "logistics", "--goal", GOAL)
    assert code == 0 and "REFINED" in out.splitlines()
    blocked = "takeRoute(123,Rt_A,W,L2),takeRoute(123,Rt_B,L2,Cf),deliver(123)"
    code, out, _ = run(capsys, "refine", "--fixture", "logistics", "--plan", blocked)
    assert code == 1 and "NO REFINEMENT at step 2" in out


def test_plan_horizon_and_project(capsys):
    code, out, _ = run(capsys, "plan", "--fixture", "logistics", "--goal", GOAL, "--horizon", "2")
    assert code == 1 and out.startswith("NO PLAN")
    code, out, _ = run(capsys, "project", "--fixture", "logistics", "--goal", GOAL,
                       "--plan", "takeRoute(123,Rt_A,W,L2),takeRoute(123,Rt_C,L2,Cf),deliver(123)")
    assert code == 0 and out.startswith("ENTAILED")


def test_explain_and_forecast(capsys):
    code, out, _ = run(capsys, "explain", "--fixture", "logistics", "--trace", A_TRACE)
    assert code == 0 and "=> takeRoute(123,Rt_A,W,L2)" in out
    code, out, _ = run(capsys, "forecast", "--fixture", "logistics", "--trace", A_TRACE,
                       "--query", "deliver(123)")
    assert code == 0
    assert "takeRoute(123,Rt_B,L2,Cf): satisfiable" in out
    assert "takeRoute(123,Rt_C,L2,Cf): satisfiable" in out
    assert "deliver(123): impossible" in out


def test_explain_ambiguous_trace(capsys):
    code, out, _ = run(capsys, "explain", "--fixture", "overlap", "--trace", "D")
    assert code == 1 and "AMBIGUOUS" in out


def test_verify_constraints(capsys):
    code, out, _ = run(capsys, "verify-constraints", "--fixture", "logistics-guarded")
    assert (code, out.splitlines()[0]) == (0, "CONSTRAINTS HOLD")
    code, out, _ = run(capsys, "verify-constraints", "--fixture", "overlap")
    assert (code, out.splitlines()[0]) == (1, "CONSTRAINTS FAIL")
    assert "(a) fails" in out


def test_check_sd_and_simulate(capsys):
    code, out, _ = run(capsys, "check-sd", "--fixture", "logistics")
    assert (code, out.splitlines()[0]) == (0, "SITUATION-DETERMINED")
    code, out, _ = run(capsys, "simulate", "--fixture", "abpqr", "--level", "high", "--lts", "dot")
    assert code == 0 and out.startswith("digraph")
    code, out, _ = run(capsys, "simulate", "--fixture", "logistics", "--trace", A_TRACE)
    assert code == 0


def test_errors_and_budgets(capsys):
    code, out, _ = run(capsys, "plan", "--fixture", "logistics", "--goal", "Delivered(123) &")
    assert code == 2 and out.startswith("error:")
    code, _, err = run(capsys, "validate")
    assert code == 2
    code, _, _ = run(capsys, "check-sound", "--fixture", "logistics", "--budget", "3")
    assert code == 3
    code, out, _ = run(capsys, "explain", "--fixture", "logistics", "--trace", "unload(123)")
    assert code == 1 and "NOT EXECUTABLE" in out


def test_json_output(capsys):
    code, out, _ = run(capsys, "plan", "--fixture", "logistics", "--goal", GOAL, "--format", "json")
    data = json.loads(out)
    assert data["command"] == "plan" and data["exit"] == code == 0
    assert data["plan"] == ["takeRoute(123,Rt_A,W,L2)", "takeRoute(123,Rt_C,L2,Cf)", "deliver(123)"]


@pytest.mark.parametrize("argv", [
    ["check-sound", "--fixture", "logistics", "--method", "both"],
    ["check-complete", "--fixture", "abpqr", "--format", "json"],
    ["verify-constraints", "--fixture", "logistics"],
    ["simulate", "--fixture", "logistics", "--level", "high"],
])
def test_reports_are_byte_identical_across_runs(capsys, argv):
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "scabstract", "check-sound", "--fixture", "logistics"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("SOUND")
