import io
import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from lqjacobi.cli import main
from lqjacobi.serialization import read_trace_csv

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_analyze_oscillator(capsys):
    code, out, _ = run(capsys, "analyze", PROBLEMS / "harmonic_oscillator.json", "--horizon", 35)
    report = json.loads(out)
    assert code == 0 and report["status"] == "agree"
    assert report["conjugate_count"] == 11 and report["maslov_count"] == 11
    assert report["verdict"]["kind"] == "InfinitelyMany"


@pytest.mark.parametrize("name", ["double_integrator", "hyperbolic_saddle", "oscillator_saddle_skewed"])
def test_analyze_named_problems(capsys, name):
    code, out, _ = run(capsys, "analyze", PROBLEMS / f"{name}.json", "--horizon", 20)
    assert code == 0 and json.loads(out)["status"] == "agree"


def test_analyze_to_file(capsys, tmp_path):
    path = tmp_path / "report.json"
    code, out, _ = run(capsys, "analyze", PROBLEMS / "double_integrator.json", "-o", path)
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["config"]["horizon"] == 30.0


def test_analyze_tolerance_override(capsys):
    code, out, _ = run(capsys, "analyze", PROBLEMS / "harmonic_oscillator.json", "--horizon", 5,
                       "--tol", "multiplicity=1e-6")
    assert code == 0 and json.loads(out)["config"]["tolerances"]["multiplicity"] == 1e-6


@pytest.mark.parametrize("argv", [
    ["analyze", PROBLEMS / "bad_dimensions.json"],
    ["analyze", PROBLEMS / "missing.json"],
    ["analyze", PROBLEMS / "harmonic_oscillator.json", "--horizon", 0],
    ["analyze", PROBLEMS / "harmonic_oscillator.json", "--tol", "bogus=1"],
    ["analyze", PROBLEMS / "harmonic_oscillator.json", "--tol", "rank"],
    ["analyze", PROBLEMS / "harmonic_oscillator.json", "--tol", "rank=x"],
    ["fixture", "--kind", "even", "--k", 0],
    ["fixture", "--kind", "odd", "--k", 1, "--sign", "2"],
    ["nonsense"],
    [],
])
def test_input_errors_exit_1(capsys, argv):
    with pytest.raises(SystemExit) as info:
        code = main([str(a) for a in argv])
        raise SystemExit(code)
    assert info.value.code == 1


def test_trace_oscillator(capsys):
    code, out, _ = run(capsys, "trace", PROBLEMS / "harmonic_oscillator.json", "--horizon", 2 * math.pi,
                       "--grid-step", 0.01)
    rows = read_trace_csv(io.StringIO(out))
    assert code == 0 and len(rows) == 629
    t, det, _, _ = rows[157]
    assert det == pytest.approx(math.sin(t), abs=1e-12)


@pytest.mark.parametrize("kind, k, dim", [("even", 1, 4), ("odd", 1, 6), ("even", 2, 8), ("odd", 0, 2)])
def test_fixture_dimensions(capsys, kind, k, dim):
    code, out, _ = run(capsys, "fixture", "--kind", kind, "--k", k, "--beta", 2.5, "--sign", "-")
    data = json.loads(out)
    assert code == 0 and data["kind"] == "hamiltonian_field"
    assert len(data["Hmat"]) == dim and data["sign"] == -1


def test_analyzing_a_fixture_is_limited(capsys, tmp_path):
    path = tmp_path / "fixture.json"
    assert run(capsys, "fixture", "--kind", "odd", "--k", 1, "-o", path)[0] == 0
    code, out, err = run(capsys, "analyze", path)
    assert code == 1 and json.loads(out)["status"] == "limited"
    assert "note:" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "lqjacobi", "analyze", str(PROBLEMS / "hyperbolic_saddle.json")],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["verdict"]["kind"] == "NoConjugateTimes"
