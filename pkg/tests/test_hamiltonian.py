import math

import numpy as np
import pytest

from sflow import generators as gen
from sflow.errors import InvalidInput, NumericalFailure
from sflow.hamiltonian import (
    HamiltonianFamily,
    SymplecticJ,
    _drift,
    _integrate,
    comparison_check,
    fundamental_solution,
    hamiltonian_sfl,
    isolated_bound_check,
    kernel_dimension,
    reverse_family,
    sign_hypothesis,
    sweep_nontrivial,
)
from sflow.maslov import LagrangianPath, constant_lagrangian_path, maslov_pair_index
from sflow.specflow import OperatorPath, constant_path, normalization_path

E1 = np.array([[1.0], [0.0]])
E2 = np.array([[0.0], [1.0]])


def rotation(c):
    return np.array([[math.cos(c), -math.sin(c)], [math.sin(c), math.cos(c)]])


def scalar_family(S, bc1=E1, bc2=E1, dS=None, n=1, grid=1000):
    """``S`` must broadcast over a leading lambda axis (lambda-free arrays do)."""
    b1 = bc1 if isinstance(bc1, LagrangianPath) else constant_lagrangian_path(bc1)
    b2 = bc2 if isinstance(bc2, LagrangianPath) else constant_lagrangian_path(bc2)
    return HamiltonianFamily(n, S, b1, b2, dS, grid, vectorized=True)


def line(theta):
    return LagrangianPath(1, lambda lam: np.array([[math.cos(theta(lam))], [math.sin(theta(lam))]]))


def test_symplectic_j():
    J = SymplecticJ(2).matrix
    assert np.array_equal(J @ J, -np.eye(4))
    assert np.array_equal(J.T, -J)


def test_zero_coefficient_gives_identity():
    fam = scalar_family(lambda lam, t: np.zeros((4, 4)), np.eye(4)[:, :2], np.eye(4)[:, :2], n=2)
    sol = fundamental_solution(fam, 0.3)
    assert all(np.array_equal(v, np.eye(4)) for v in sol.values)
    assert sol.symplectic_drift == 0.0


@pytest.mark.parametrize("c", [0.7, math.pi, 5.0, -2.3])
def test_constant_coefficient_is_rotation(c):
    fam = scalar_family(lambda lam, t: c * np.eye(2))
    sol = fundamental_solution(fam, 0.0)
    assert np.allclose(sol.monodromy, rotation(c), atol=1e-10)
    assert np.allclose(sol.psi(0.5), rotation(c / 2), atol=1e-10)
    assert np.array_equal(sol.psi(0.0), np.eye(2))


def test_time_dependent_scalar_coefficient():
    # S = c(t) I rotates by the integral of c
    fam = scalar_family(lambda lam, t: (1.0 + lam * 6.0 * t * t) * np.eye(2))
    for lam in (0.0, 0.5, 1.0):
        assert np.allclose(fundamental_solution(fam, lam).monodromy, rotation(1.0 + 2.0 * lam), atol=1e-10)


def _rough_family(grid):
    def S(lam, t):
        return np.array([[4.0 + 3 * math.sin(5 * t), 2.0 * t], [2.0 * t, -3.0 + t]]) * (1 + lam)
    return scalar_family(S, grid=grid)


def test_drift_is_small_at_default_grid():
    assert fundamental_solution(_rough_family(1000), 1.0).symplectic_drift <= 1e-8


def test_drift_shrinks_at_fourth_order():
    drifts = [float(_drift(_integrate(_rough_family(g), [1.0])[0], SymplecticJ(1).matrix)) for g in (25, 50, 100)]
    assert drifts[0] / drifts[1] >= 8.0
    assert drifts[1] / drifts[2] >= 8.0


def test_excessive_drift_is_reported():
    fam = scalar_family(lambda lam, t: np.diag([400.0, -1.0]), grid=20)
    with pytest.raises(NumericalFailure):
        fundamental_solution(fam, 0.5)


def test_kernel_dimension_examples():
    fam = scalar_family(lambda lam, t: np.zeros((4, 4)), np.eye(4)[:, :2], np.eye(4)[:, :2], n=2)
    assert kernel_dimension(fam, 0.4) == 2
    for c, expected in [(math.pi, 1), (2 * math.pi, 1), (1.0, 0), (math.pi / 2, 0)]:
        assert kernel_dimension(scalar_family(lambda lam, t, c=c: c * np.eye(2)), 0.0) == expected


def test_kernel_dimension_at_most_n(rng):
    for seed in range(5):
        fam = gen.sign_hypothesis_family(seed, n=2, grid=200)
        for lam in rng.uniform(0, 1, 5):
            assert 0 <= kernel_dimension(fam, lam) <= 2


def test_rotation_instance():
    fam = gen.rotation_family()
    rep = hamiltonian_sfl(fam)
    assert rep.value == 3
    lams = [c.lambda_star for c in rep.crossings]
    assert np.allclose(lams, [0.0, 1 / 3, 2 / 3, 1.0], atol=1e-6)
    assert [c.contribution for c in rep.crossings] == [0, 1, 1, 1]
    assert rep.diagnostics["drift"] <= 1e-8
    assert hamiltonian_sfl(reverse_family(fam)).value == -3


def test_rotation_sweep():
    rep = sweep_nontrivial(gen.rotation_family())
    assert rep.count == 4
    assert rep.maslov_pair == 0  # constant boundary pair
    assert all(s.kernel_dim == 1 for s in rep.solutions)


def test_transversal_constant_pair_has_no_solutions():
    fam = scalar_family(lambda lam, t: np.zeros((2, 2)), E1, E2, dS=lambda lam, t: np.zeros((2, 2)))
    assert sweep_nontrivial(fam).count == 0
    assert hamiltonian_sfl(fam).value == 0


def test_continuum_of_solutions_is_rejected():
    fam = scalar_family(lambda lam, t: np.zeros((2, 2)), E1, E1)
    with pytest.raises(InvalidInput):
        sweep_nontrivial(fam)


def test_sfl_preconditions():
    fam = scalar_family(lambda lam, t: np.zeros((2, 2)), line(lambda l: l), E2, dS=lambda lam, t: np.zeros((2, 2)))
    with pytest.raises(InvalidInput):
        hamiltonian_sfl(fam)
    with pytest.raises(InvalidInput):
        hamiltonian_sfl(scalar_family(lambda lam, t: lam * np.eye(2), E1, E2))


def test_unperturbed_solutions_match_pair_crossings():
    # with S = 0 the kernel is Lambda1 cap Lambda2
    bc1 = line(lambda l: 3 * math.pi * l + 0.2)
    fam = scalar_family(lambda lam, t: np.zeros((2, 2)), bc1, E1)
    sweep = sweep_nontrivial(fam)
    pair = maslov_pair_index(bc1, constant_lagrangian_path(E1))
    assert np.allclose([s.lam for s in sweep.solutions], [c.lambda_star for c in pair.crossings], atol=1e-7)
    oracle = [(k * math.pi - 0.2) / (3 * math.pi) for k in (1, 2, 3)]
    assert np.allclose([s.lam for s in sweep.solutions], oracle, atol=1e-7)
    assert sweep.maslov_pair == pair.value == 3


def test_rotating_boundary_count_bound():
    rep = sweep_nontrivial(gen.rotating_boundary_family())
    assert rep.maslov_pair == 3
    assert rep.bound == 3
    assert rep.count >= 3 and rep.bound_satisfied
    assert rep.hypothesis == "i"


@pytest.mark.parametrize("seed", range(3))
def test_sign_hypothesis_instances(seed):
    fam = gen.sign_hypothesis_family(seed, n=1 + seed % 2, grid=200)
    assert sign_hypothesis(fam) in ("i", "ii")
    assert sweep_nontrivial(fam).bound_satisfied


def test_comparison_matrix_model():
    eps = 0.1
    base = OperatorPath(2, lambda l: np.diag([l - 0.5, 1.0]), lambda l: np.diag([1.0, 0.0]))
    plus, minus = constant_path(eps * np.eye(2)), constant_path(-eps * np.eye(2))
    with pytest.raises(InvalidInput):
        comparison_check(base, plus, minus)
    rec = comparison_check(base, plus, plus)
    assert rec.sfl_K == rec.sfl_Kprime == 1 and rec.holds


@pytest.mark.parametrize("seed", range(10))
def test_comparison_matrix_random(seed):
    rng = gen.make_rng(seed)
    dim = 1 + seed % 5
    A = gen.generate_operator_path(seed, dim)
    K = constant_path(gen.random_symmetric(rng, dim, 0.3))
    P0, P1 = gen.random_psd(rng, dim, scale=0.5), gen.random_psd(rng, dim, scale=0.5)
    Kp = OperatorPath(dim, lambda l: K.at(l) + (1 - l) * P0 - l * P1, lambda l: -P0 - P1)
    assert comparison_check(A, K, Kp).holds


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(2))
def test_comparison_hamiltonian(seed):
    base, K, Kp = gen.comparison_family(seed, n=1 + seed % 2)
    rec = comparison_check(base, K, Kp)
    assert rec.model == "hamiltonian" and rec.holds


def test_comparison_hamiltonian_rejects_reversed_hypothesis():
    base, K, Kp = gen.comparison_family(3, n=1)
    with pytest.raises(InvalidInput):
        comparison_check(base, Kp, K)


def test_isolated_bound_examples():
    scalar = OperatorPath(1, lambda l: np.array([[l - 0.5]]), lambda l: np.eye(1))
    rec = isolated_bound_check(scalar, 0.5)
    assert (rec.sfl_abs, rec.kernel_dim, rec.holds) == (1, 1, True)
    cancel = OperatorPath(2, lambda l: np.diag([l - 0.5, 0.5 - l]), lambda l: np.diag([1.0, -1.0]))
    rec = isolated_bound_check(cancel, 0.5)
    assert (rec.sfl_abs, rec.kernel_dim, rec.holds) == (0, 2, True)
    rec = isolated_bound_check(normalization_path(np.diag([0.0, 0.0, 3.0])), 0.5)
    assert (rec.sfl_abs, rec.kernel_dim, rec.holds) == (2, 2, True)


def test_isolated_bound_rejects_multiple_crossings():
    p = OperatorPath(1, lambda l: np.array([[math.cos(3 * math.pi * l)]]),
                     lambda l: np.array([[-3 * math.pi * math.sin(3 * math.pi * l)]]))
    with pytest.raises(InvalidInput):
        isolated_bound_check(p)


@pytest.mark.parametrize("seed", range(10))
def test_isolated_bound_generated(seed):
    p = gen.single_crossing_path(seed, 1 + seed % 6)
    rec = isolated_bound_check(p, p.meta["lambda_star"])
    assert rec.kernel_dim == p.meta["kernel_dim"]
    assert rec.holds


def test_isolated_bound_hamiltonian():
    fam = gen.rotation_family(rate=1.5 * math.pi, grid=400)
    # only lambda = 2/3 aligns the rotation with the boundary line; lambda = 0 is excluded below
    shifted = fam.with_S(lambda lam, t: 1.5 * math.pi * (0.5 + 0.5 * np.asarray(lam))[..., None, None] * np.eye(2),
                         lambda lam, t: 0.75 * math.pi * np.eye(2), vectorized=True)
    rec = isolated_bound_check(shifted, 1 / 3)
    assert rec.kernel_dim == 1 and rec.sfl_abs == 1 and rec.holds
