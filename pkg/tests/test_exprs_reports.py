import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sflow import reports
from sflow.errors import InvalidInput
from sflow.exprs import MatrixExpr, parse


@pytest.mark.parametrize("text", [
    "__import__('os')",
    "lam.real",
    "x + 1",
    "lam if lam else 0",
    "[lam]",
    "sin(lam, lam)",
    "open('f')",
    "lam +",
    "lambda: 0",
])
def test_parse_rejects(text):
    with pytest.raises(InvalidInput):
        parse(text)


def test_parse_rejects_non_numbers():
    for bad in (True, None, [1]):
        with pytest.raises(InvalidInput):
            parse(bad)


def test_parse_values():
    M = MatrixExpr([["lam - 1/2", "sin(pi*lam)"], ["sin(pi*lam)", 2]])
    out = M(0.25)
    assert out.shape == (2, 2)
    assert out[0, 0] == -0.25
    assert out[0, 1] == pytest.approx(math.sin(math.pi / 4), abs=1e-15)
    assert M.is_symmetric()
    assert not MatrixExpr([["0", "lam"], ["1", "0"]]).is_symmetric()


def test_broadcasting_and_derivative():
    M = MatrixExpr([["lam**2", 1], [1, "exp(lam)"]])
    lams = np.linspace(0, 1, 5)
    vals = M(lams)
    assert vals.shape == (5, 2, 2)
    assert np.allclose(vals[:, 0, 1], 1.0)
    dM = M.derivative("lam")
    assert np.allclose(dM(lams)[:, 0, 0], 2 * lams)
    assert np.allclose(dM(lams)[:, 1, 1], np.exp(lams))
    assert np.allclose(dM(lams)[:, 0, 1], 0.0)


def test_variables_are_checked():
    with pytest.raises(InvalidInput):
        MatrixExpr([["t"]], variables=("lam",))
    two = MatrixExpr([["lam*t"]], variables=("lam", "t"))
    assert two(0.5, 4.0)[0, 0] == 2.0
    with pytest.raises(InvalidInput):
        MatrixExpr([[1, 2], [3]])
    with pytest.raises(InvalidInput):
        MatrixExpr([])


def test_format_float():
    assert reports.format_float(1.0) == "1.0"
    assert reports.format_float(0.1) == "0.10000000000000001"
    assert reports.format_float(1e300) == "1.0000000000000001e+300"
    assert reports.format_float(float("nan")) == '"nan"'
    assert reports.format_float(float("-inf")) == '"-inf"'


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_round_trip(x):
    back = reports.loads(reports.dumps({"x": x}))["x"]
    assert back == x and isinstance(back, float)


def test_dumps_plain_types():
    obj = {"a": np.float64(0.5), "b": np.arange(3), "c": (True, None, "s"), "d": np.int64(7)}
    text = reports.dumps(obj)
    assert json.loads(text) == {"a": 0.5, "b": [0, 1, 2], "c": [True, None, "s"], "d": 7}
    assert reports.dumps(obj) == text


def test_envelope_sorts_crossings():
    env = reports.envelope("sfl", 3, {}, {"value": 0}, None,
                           [{"lambda_star": 0.9}, {"lambda_star": 0.1}])
    assert [c["lambda_star"] for c in env["crossings"]] == [0.1, 0.9]
    assert env["schema_version"] == reports.SCHEMA_VERSION
    assert list(env) == ["schema_version", "command", "seed", "config", "result", "certificates", "crossings"]


def test_csv(tmp_path):
    path = reports.write_csv(tmp_path / "t.csv", [[0.0, 1.0, -2.0], [0.5, 0.25, 3.0]], "eig")
    text = path.read_bytes().decode("utf-8")
    assert text.splitlines()[0] == "lambda,eig_1,eig_2"
    assert "\r" not in text
    assert text.splitlines()[2] == "0.5,0.25,3"
