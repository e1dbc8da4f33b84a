import json
import subprocess
import sys
from pathlib import Path

import pytest

from sflow.cli import main

SPECS = Path(__file__).resolve().parent.parent / "specs"


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return path


def test_sfl_np_spec(capsys):
    code, out, _ = run(["sfl", SPECS / "np.json"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["command"] == "sfl"
    assert rep["result"] == {"partition": 1, "crossings": 1, "value": 1, "agree": True}
    assert len(rep["crossings"]) == 1 and abs(rep["crossings"][0]["lambda_star"] - 0.5) < 1e-10


def test_sfl_two_branches(capsys):
    code, out, _ = run(["sfl", SPECS / "two_branches.json", "--method", "crossings"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["result"]["value"] == 0
    assert [c["contribution"] for c in rep["crossings"]] == [1, -1]


def test_sfl_writes_files(tmp_path, capsys):
    code, out, _ = run(["sfl", SPECS / "np.json", "--out", tmp_path, "--emit-csv"], capsys)
    assert code == 0 and out == ""
    assert json.loads((tmp_path / "sfl.json").read_text())["result"]["value"] == 1
    header = (tmp_path / "sfl_trajectory.csv").read_text().splitlines()[0]
    assert header == "lambda,eig_1,eig_2,eig_3"


def test_json_output_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(["sfl", SPECS / "two_branches.json", "--out", d], capsys)[0] == 0
    assert (a / "sfl.json").read_bytes() == (b / "sfl.json").read_bytes()


def test_gap(capsys):
    code, out, _ = run(["gap", SPECS / "gap_scalar.json"], capsys)
    assert code == 0
    res = json.loads(out)["result"]
    assert res["gap"] == 0.0
    assert abs(res["inequality"]["lhs"] - 2 ** -0.5) < 1e-13
    assert abs(res["inequality"]["rhs"] - 4.0) < 1e-12


def test_gap_dimension_mismatch(tmp_path, capsys):
    spec = write(tmp_path, "bad.json", {"T": [[1.0]], "S": [[1.0, 0.0], [0.0, 1.0]]})
    code, _, err = run(["gap", spec], capsys)
    assert code == 2 and "invalid input" in err


def test_maslov_specs(tmp_path, capsys):
    code, out, _ = run(["maslov", SPECS / "maslov_line.json", "--out", tmp_path, "--emit-csv"], capsys)
    assert code == 0
    assert json.loads((tmp_path / "maslov.json").read_text())["result"]["value"] == 1
    assert (tmp_path / "maslov_trajectory.csv").read_text().startswith("lambda,angle_1\n")
    code, out, _ = run(["maslov", SPECS / "maslov_pair.json"], capsys)
    assert code == 0 and json.loads(out)["result"]["value"] == 3


def test_hamiltonian_specs(capsys):
    code, out, _ = run(["hamiltonian", SPECS / "rotation.json"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["result"]["value"] == 3
    assert [round(c["lambda_star"], 6) for c in rep["crossings"]] == [0.0, 0.333333, 0.666667, 1.0]
    code, out, _ = run(["hamiltonian", SPECS / "rotating_boundary.json"], capsys)
    assert code == 0
    res = json.loads(out)["result"]
    assert res["maslov_pair"] == 3 and res["count"] >= res["bound"] == 3


def test_hamiltonian_bound_mode(tmp_path, capsys):
    spec = write(tmp_path, "b.json", {"n": 1, "S": [["pi*(1/2 + lam)", 0], [0, "pi*(1/2 + lam)"]],
                                      "bc1": [[1], [0]], "bc2": [[1], [0]], "grid": 400, "mode": "bound",
                                      "lambda_star": 0.5})
    code, out, _ = run(["hamiltonian", spec], capsys)
    assert code == 0
    assert json.loads(out)["result"]["holds"] is True


@pytest.mark.parametrize("spec", [
    {"dim": 2, "matrix": [["lam", 1], [0, 1]]},  # not symmetric
    {"dim": 2, "matrix": [["lam"]]},  # wrong shape
    {"dim": 1, "matrix": [["__import__('os')"]]},
    {"dim": 1},  # missing matrix
])
def test_sfl_invalid_specs(tmp_path, capsys, spec):
    code, _, err = run(["sfl", write(tmp_path, "s.json", spec)], capsys)
    assert code == 2, err


def test_help_exits_zero(capsys):
    assert run(["--help"], capsys)[0] == 0


def test_missing_file_and_bad_flags(tmp_path, capsys):
    assert run(["sfl", tmp_path / "nope.json"], capsys)[0] == 2
    assert run(["sfl", SPECS / "np.json", "--method", "magic"], capsys)[0] == 2
    assert run(["bogus"], capsys)[0] == 2
    assert run(["axioms", "--seed", "-1"], capsys)[0] == 2
    assert run(["axioms", "--samples", "nosuch=3"], capsys)[0] == 2


def test_numerical_failure_exit_code(tmp_path, capsys):
    spec = write(tmp_path, "h.json", {"n": 1, "S": [["400", 0], [0, "-1"]], "bc1": [[1], [0]],
                                      "bc2": [[0], [1]], "grid": 10, "mode": "sweep"})
    assert run(["hamiltonian", spec], capsys)[0] == 3


def test_small_axioms_run(tmp_path, capsys):
    code, _, err = run(["axioms", "--seed", "1", "--samples", "1", "--dim", "4", "--out", tmp_path], capsys)
    assert code == 0, err
    rep = json.loads((tmp_path / "axioms.json").read_text())
    assert rep["result"]["verdict"] == "pass"
    assert "method-agreement" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "sflow", "sfl", str(SPECS / "np.json"), "--method", "partition"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["value"] == 1
