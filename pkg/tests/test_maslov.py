import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sflow import generators as gen
from sflow.errors import DegenerateCrossing, InvalidInput
from sflow.maslov import (
    LagrangianPath,
    angle_trajectory,
    concatenate_lagrangian,
    constant_lagrangian_path,
    graph_lagrangian,
    graph_path,
    intersection_dim,
    is_constant_path,
    is_lagrangian,
    lagrangian_frame,
    maslov_index,
    maslov_pair_index,
    restrict_lagrangian,
    sfl_via_maslov,
    standard_j,
)
from sflow.specflow import OperatorPath, normalization_path, restrict, sfl_crossings, sfl_partition

from conftest import random_sym, sfl_oracle

E = np.eye(4)
HORIZONTAL1 = np.array([[1.0], [0.0]])


def line_path(theta):
    return LagrangianPath(1, lambda lam: np.array([[math.cos(theta(lam))], [math.sin(theta(lam))]]))


def multiples_of_pi_crossed(a, b):
    """Number of k*pi in (a, b] for a < b."""
    return math.floor(b / math.pi) - math.floor(a / math.pi)


def test_standard_j():
    for n in (1, 2, 3):
        J = standard_j(n)
        assert np.array_equal(J @ J, -np.eye(2 * n))
        assert np.array_equal(J.T, -J)


def test_is_lagrangian_examples():
    assert is_lagrangian(np.eye(2)[:, :1])
    assert is_lagrangian(E[:, [0, 1]])
    assert not is_lagrangian(E[:, [0, 2]])
    assert E[:, 0] @ standard_j(2) @ E[:, 2] == -1.0


def test_lagrangian_frame_rejects():
    with pytest.raises(InvalidInput):
        lagrangian_frame(E[:, [0, 2]])
    with pytest.raises(InvalidInput):
        lagrangian_frame(E[:, :1])


def test_intersection_dim_examples():
    L = graph_lagrangian(np.diag([2.0, -1.0]))
    assert intersection_dim(L, L) == 2
    assert intersection_dim(np.eye(2)[:, :1], np.eye(2)[:, 1:]) == 0
    assert intersection_dim(graph_lagrangian(np.diag([0.0, 1.0])), graph_lagrangian(np.zeros((2, 2)))) == 1


def test_graph_lagrangian_examples():
    assert np.allclose(np.abs(graph_lagrangian(np.zeros((2, 2))).frame), E[:, :2], atol=1e-15)
    F = graph_lagrangian(np.ones((1, 1))).frame
    assert np.allclose(np.abs(F), [[1 / math.sqrt(2)], [1 / math.sqrt(2)]], atol=1e-15)


@settings(max_examples=40)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 6), kdim=st.integers(0, 6))
def test_graph_properties(seed, n, kdim):
    rng = np.random.default_rng(seed)
    T = random_sym(rng, n, 3.0)
    assert is_lagrangian(graph_lagrangian(T).frame)
    # plant a kernel of known dimension
    Q = gen.random_orthogonal(rng, n)
    k = min(kdim, n)
    d = np.concatenate([np.zeros(k), rng.choice([-1, 1], n - k) * rng.uniform(0.5, 3, n - k)])
    T0 = Q @ np.diag(d) @ Q.T
    assert intersection_dim(graph_lagrangian(T0), graph_lagrangian(np.zeros((n, n)))) == k


def test_constant_transversal_is_zero():
    p = constant_lagrangian_path(np.eye(2)[:, 1:])
    assert maslov_index(p, HORIZONTAL1).value == 0
    assert is_constant_path(p)


def test_rotating_line_crosses_once_upward():
    p = line_path(lambda l: math.pi * (l - 0.5))
    rep = maslov_index(p, HORIZONTAL1)
    assert rep.value == 1
    (c,) = rep.crossings
    assert abs(c.lambda_star - 0.5) < 1e-8
    assert maslov_index(line_path(lambda l: -math.pi * (l - 0.5)), HORIZONTAL1).value == -1


def test_rotation_by_three_pi():
    p = line_path(lambda l: 3 * math.pi * l)
    rep = maslov_index(p, HORIZONTAL1)
    assert [round(c.lambda_star, 6) for c in rep.crossings] == [0.0, round(1 / 3, 6), round(2 / 3, 6), 1.0]
    # the start crossing is positive so contributes nothing; the end one counts
    assert rep.value == 3


@pytest.mark.parametrize("a,b", [(0.3, 2.0), (-1.0, 7.5), (0.1, 9.9), (2.0, 0.5), (-4.0, -0.2)])
def test_line_rotation_matches_angle_count(a, b):
    p = line_path(lambda l: a + (b - a) * l)
    expected = multiples_of_pi_crossed(a, b) if b > a else -multiples_of_pi_crossed(b, a)
    assert maslov_index(p, HORIZONTAL1).value == expected


@settings(max_examples=15)
@given(seed=st.integers(0, 10 ** 6), n=st.integers(1, 3), rate=st.floats(0.5, 9.0))
def test_unitary_rotation_matches_eigenangle_count(seed, n, rate):
    # U(l) = U0 e^{i r l}; intersections with the horizontal are eigenvalues 1 of U U^T
    rng = np.random.default_rng(seed)
    base = gen.random_lagrangian(rng, n)
    p = gen.rotating_lagrangian(n, base, [rate] * n)
    U0 = base[:n] + 1j * base[n:]
    alpha = np.angle(np.linalg.eigvals(U0 @ U0.T))
    expected = sum(math.floor((a + 2 * rate) / (2 * math.pi)) - math.floor(a / (2 * math.pi)) for a in alpha)
    assert maslov_index(p, np.vstack([np.eye(n), np.zeros((n, n))])).value == expected


def test_concatenation_additivity():
    p = line_path(lambda l: 0.2 + 5.0 * l)
    left, right = restrict_lagrangian(p, 0.0, 0.55), restrict_lagrangian(p, 0.55, 1.0)
    whole = maslov_index(concatenate_lagrangian(left, right), HORIZONTAL1).value
    parts = maslov_index(left, HORIZONTAL1).value + maslov_index(right, HORIZONTAL1).value
    assert whole == parts == maslov_index(p, HORIZONTAL1).value == 1


def test_pair_examples():
    fixed = constant_lagrangian_path(HORIZONTAL1)
    transversal = constant_lagrangian_path(np.eye(2)[:, 1:])
    assert maslov_pair_index(fixed, transversal).value == 0
    rot = line_path(lambda l: 3 * math.pi * l)
    assert maslov_pair_index(rot, fixed).value == 3
    assert maslov_pair_index(fixed, rot).value == -3


def test_pair_equal_constant_raises():
    fixed = constant_lagrangian_path(HORIZONTAL1)
    with pytest.raises(DegenerateCrossing):
        maslov_pair_index(fixed, fixed)


def test_pair_dimension_mismatch():
    with pytest.raises(InvalidInput):
        maslov_pair_index(constant_lagrangian_path(HORIZONTAL1), constant_lagrangian_path(E[:, :2]))


@settings(max_examples=10)
@given(seed=st.integers(0, 10 ** 6), rate=st.floats(1.0, 12.0))
def test_pair_against_fixed_reference_matches_single_index(seed, rate):
    rng = np.random.default_rng(seed)
    base = gen.random_lagrangian(rng, 2)
    L0 = gen.random_lagrangian(rng, 2)
    p = gen.rotating_lagrangian(2, base, [rate, 0.5 * rate])
    single = maslov_index(p, L0).value
    assert maslov_pair_index(p, constant_lagrangian_path(L0)).value == single
    assert maslov_pair_index(constant_lagrangian_path(L0), p).value == -single


def test_sfl_identity_examples():
    scalar = OperatorPath(1, lambda l: np.array([[l - 0.5]]), lambda l: np.eye(1))
    assert sfl_via_maslov(scalar) == 1 == sfl_crossings(scalar).value
    assert sfl_via_maslov(normalization_path(np.diag([0.0, 0.0, 3.0]))) == 2
    invertible = OperatorPath(2, lambda l: np.diag([1 + l, -2.0]), lambda l: np.diag([1.0, 0.0]))
    assert sfl_via_maslov(invertible) == 0


def test_normalization_halves():
    p = normalization_path(np.diag([0.0, 0.0, 3.0]))
    assert sfl_via_maslov(restrict(p, 0.0, 0.5)) == 2
    assert sfl_via_maslov(restrict(p, 0.5, 1.0)) == 0
    rep = maslov_index(graph_path(p), graph_lagrangian(np.zeros((3, 3))))
    (c,) = rep.crossings
    assert c.index.n_pos == 2


@settings(max_examples=20)
@given(seed=st.integers(0, 10 ** 6), dim=st.integers(1, 6))
def test_sfl_equals_maslov(seed, dim):
    p = gen.generate_operator_path(seed, dim)
    expected = sfl_oracle(p)
    assert sfl_via_maslov(p) == expected == sfl_partition(p).value


@pytest.mark.parametrize("seed", range(4))
def test_fixed_endpoint_homotopy_invariance(seed):
    h = gen.generate_homotopy(seed, 2 + seed % 3, "fixed-edge")
    e = h.edges()
    assert sfl_via_maslov(e["bottom"]) == sfl_via_maslov(e["top"])


def test_angle_trajectory():
    rows = angle_trajectory(line_path(lambda l: math.pi * l / 2), HORIZONTAL1, samples=3)
    assert [r[0] for r in rows] == [0.0, 0.5, 1.0]
    assert np.allclose([r[1] for r in rows], [0.0, math.pi / 4, math.pi / 2], atol=1e-7)
