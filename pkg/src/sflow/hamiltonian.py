"""Linear Hamiltonian boundary-value problems depending on a parameter.

The problem is ``J u'(t) + S_l(t) u(t) = 0`` on ``[0, 1]`` with
``u(0) in Lambda1(l)`` and ``u(1) in Lambda2(l)``.  Solutions are transported
by the fundamental matrix ``Psi' = J S Psi`` (classical RK4 on a fixed grid,
batched over parameter values), so ``l`` carries a nontrivial solution iff
``Psi_l(1) Lambda1(l)`` meets ``Lambda2(l)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import trapezoid

from .config import Options, resolve
from .errors import DegenerateCrossing, InvalidInput, NumericalFailure
from .maslov import (
    LagrangianPath,
    _sine_threshold,
    intersection_dim,
    is_constant_path,
    maslov_pair_index,
)
from .numerics import as_sym, is_psd, kernel_basis, orthonormalize, quadform_index
from .specflow import CrossingRecord, OperatorPath, SflReport, locate_crossings, sfl_partition


@dataclass(frozen=True)
class SymplecticJ:
    n: int

    @property
    def matrix(self) -> np.ndarray:
        J = np.zeros((2 * self.n, 2 * self.n))
        J[: self.n, self.n:] = -np.eye(self.n)
        J[self.n:, : self.n] = np.eye(self.n)
        return J


@dataclass
class HamiltonianFamily:
    """Coefficients and boundary conditions of the parametrized problem.

    ``S(lam, t)`` returns a symmetric ``2n x 2n`` matrix.  With
    ``vectorized=True`` it must also accept a 1-d array of ``lam`` values and
    return something broadcastable to ``(len(lam), 2n, 2n)``.
    """

    n: int
    S: Callable
    bc1: LagrangianPath
    bc2: LagrangianPath
    S_deriv: Callable | None = None
    grid: int = 1000
    vectorized: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1 or self.grid < 1:
            raise InvalidInput("n and grid must be positive")
        if self.bc1.n != self.n or self.bc2.n != self.n:
            raise InvalidInput("boundary conditions do not match n")

    @property
    def J(self) -> np.ndarray:
        return SymplecticJ(self.n).matrix

    def S_batch(self, lams: np.ndarray, t: float) -> np.ndarray:
        m, d = len(lams), 2 * self.n
        if self.vectorized:
            out = np.broadcast_to(np.asarray(self.S(lams, t), dtype=float), (m, d, d))
        else:
            out = np.array([self.S(float(lam), t) for lam in lams], dtype=float).reshape(m, d, d)
        return out

    def dS(self, lam: float, t: float) -> np.ndarray:
        if self.S_deriv is None:
            raise InvalidInput("family has no S_deriv")
        return np.asarray(self.S_deriv(lam, t), dtype=float)

    def with_S(self, S, S_deriv=None, vectorized=None) -> "HamiltonianFamily":
        return HamiltonianFamily(self.n, S, self.bc1, self.bc2, S_deriv, self.grid,
                                 self.vectorized if vectorized is None else vectorized, dict(self.meta))


def _integrate(fam: HamiltonianFamily, lams, keep_path: bool = False):
    """RK4 for ``Psi' = J S Psi``; returns ``Psi(1)`` per lambda, or the full grid."""
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    d = 2 * fam.n
    J = fam.J
    h = 1.0 / fam.grid
    psi = np.broadcast_to(np.eye(d), (len(lams), d, d)).copy()
    path = [psi.copy()] if keep_path else None
    A0 = J @ fam.S_batch(lams, 0.0)
    for k in range(fam.grid):
        t = k * h
        Am = J @ fam.S_batch(lams, t + 0.5 * h)
        A1 = J @ fam.S_batch(lams, t + h)
        k1 = A0 @ psi
        k2 = Am @ (psi + 0.5 * h * k1)
        k3 = Am @ (psi + 0.5 * h * k2)
        k4 = A1 @ (psi + h * k3)
        psi = psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if keep_path:
            path.append(psi.copy())
        A0 = A1
    if keep_path:
        return np.stack(path, axis=1)  # (m, grid+1, d, d)
    return psi


def _drift(psi: np.ndarray, J: np.ndarray) -> np.ndarray:
    """``||Psi^T J Psi - J||_F`` over the trailing two axes."""
    R = np.swapaxes(psi, -1, -2) @ J @ psi - J
    return np.sqrt(np.sum(R * R, axis=(-2, -1)))


@dataclass
class FundamentalSolution:
    lam: float
    times: np.ndarray
    values: np.ndarray
    symplectic_drift: float

    def psi(self, t: float) -> np.ndarray:
        """Grid value at ``t``, linearly interpolated between grid points."""
        x = float(t) * (len(self.times) - 1)
        k = min(int(math.floor(x)), len(self.times) - 2)
        w = x - k
        if w == 0.0:
            return self.values[k].copy()
        return (1.0 - w) * self.values[k] + w * self.values[k + 1]

    @property
    def monodromy(self) -> np.ndarray:
        return self.values[-1]


def fundamental_solution(fam: HamiltonianFamily, lam: float, opts: Options | None = None) -> FundamentalSolution:
    o = resolve(opts)
    values = _integrate(fam, [lam], keep_path=True)[0]
    drift = float(np.max(_drift(values, fam.J)))
    if not np.all(np.isfinite(values)) or drift > 100.0 * o.drift_tol:
        raise NumericalFailure(f"symplectic drift {drift:.3g} at lambda={lam!r}; increase the grid", lam=lam)
    return FundamentalSolution(float(lam), np.linspace(0.0, 1.0, fam.grid + 1), values, drift)


def _frames(path: LagrangianPath, lams) -> np.ndarray:
    if is_constant_path(path):
        F = path.frame_at(0.0)
        return np.broadcast_to(F, (len(lams),) + F.shape)
    return np.array([path.frame_at(lam) for lam in lams])


def _angles(fam: HamiltonianFamily, lams, psi1) -> np.ndarray:
    """Sine of the smallest principal angle between ``Psi(1) Lambda1`` and ``Lambda2``."""
    F1 = _frames(fam.bc1, lams)
    F2 = _frames(fam.bc2, lams)
    Q, _ = np.linalg.qr(psi1 @ F1)
    W = np.swapaxes(F2, -1, -2) @ fam.J @ Q
    return np.linalg.svd(W, compute_uv=False)[:, -1]


def kernel_dimension(fam: HamiltonianFamily, lam: float, tol: float | None = None) -> int:
    tol = resolve(None).tol_rank if tol is None else tol
    psi1 = _integrate(fam, [lam])[0]
    transported = orthonormalize(psi1 @ fam.bc1.frame_at(lam))
    return intersection_dim(transported, fam.bc2.frame_at(lam), tol)


def kernel_initial_values(fam: HamiltonianFamily, lam: float, psi1: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis of ``{u0 in Lambda1 : Psi(1) u0 in Lambda2}``."""
    F1 = fam.bc1.frame_at(lam)
    F2 = fam.bc2.frame_at(lam)
    Q, R = np.linalg.qr(psi1 @ F1)
    W = F2.T @ fam.J @ Q
    _, s, Vt = np.linalg.svd(W)
    D = Vt[s <= _sine_threshold(tol)].T
    if D.shape[1] == 0:
        return np.zeros((2 * fam.n, 0))
    return orthonormalize(F1 @ np.linalg.solve(R, D))


@dataclass
class Solution:
    lam: float
    kernel_dim: int
    kernel_frame: np.ndarray
    angle: float

    def as_dict(self) -> dict:
        return {"lambda": self.lam, "kernel_dim": self.kernel_dim,
                "kernel_frame": self.kernel_frame.tolist(), "angle": self.angle}


@dataclass
class SweepReport:
    solutions: list
    maslov_pair: int
    n: int
    hypothesis: str | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def count(self) -> int:
        return len(self.solutions)

    @property
    def bound(self) -> int:
        return -(-abs(self.maslov_pair) // self.n)

    @property
    def bound_satisfied(self) -> bool:
        return self.count >= self.bound

    def as_dict(self) -> dict:
        return {
            "solutions": [s.as_dict() for s in self.solutions],
            "count": self.count,
            "maslov_pair": self.maslov_pair,
            "bound": self.bound,
            "bound_satisfied": self.bound_satisfied,
            "hypothesis": self.hypothesis,
            "diagnostics": dict(self.diagnostics),
        }


def _refine(fam, brackets, iterations: int, points: int = 17):
    """Batched multi-section minimization of the angle on each bracket."""
    brackets = [tuple(b) for b in brackets]
    for _ in range(iterations):
        if not brackets:
            break
        xs = np.concatenate([np.linspace(lo, hi, points) for lo, hi in brackets])
        g = _angles(fam, xs, _integrate(fam, xs)).reshape(len(brackets), points)
        nxt = []
        for (lo, hi), row, x in zip(brackets, g, xs.reshape(len(brackets), points)):
            j = int(np.argmin(row))
            nxt.append((x[max(j - 1, 0)], x[min(j + 1, points - 1)]))
        brackets = nxt
    mids = np.array([0.5 * (lo + hi) for lo, hi in brackets])
    return mids


def sign_hypothesis(fam: HamiltonianFamily, samples: int = 101, tol: float | None = None) -> str | None:
    """``"i"`` if S_0 <= 0 <= S_1, ``"ii"`` if S_0 >= 0 >= S_1, else None (pointwise on a t-grid)."""
    tol = resolve(None).tol_rank if tol is None else tol
    ts = np.linspace(0.0, 1.0, samples)
    S0 = [as_sym(fam.S_batch(np.array([0.0]), t)[0]) for t in ts]
    S1 = [as_sym(fam.S_batch(np.array([1.0]), t)[0]) for t in ts]
    if all(is_psd(-a, tol) for a in S0) and all(is_psd(b, tol) for b in S1):
        return "i"
    if all(is_psd(a, tol) for a in S0) and all(is_psd(-b, tol) for b in S1):
        return "ii"
    return None


def pair_maslov(fam: HamiltonianFamily, opts: Options | None = None) -> int:
    """Maslov index of the boundary pair; a constant pair has index 0."""
    if is_constant_path(fam.bc1) and is_constant_path(fam.bc2):
        return 0
    return maslov_pair_index(fam.bc1, fam.bc2, opts).value


def sweep_nontrivial(fam: HamiltonianFamily, opts: Options | None = None, with_maslov: bool = True) -> SweepReport:
    """All parameter values carrying a nontrivial solution."""
    o = resolve(opts)
    thr = _sine_threshold(o.tol_rank)
    lams = np.linspace(0.0, 1.0, o.sweep_samples)
    psi1 = _integrate(fam, lams)
    drift = float(np.max(_drift(psi1, fam.J)))
    if not np.all(np.isfinite(psi1)) or drift > 100.0 * o.drift_tol:
        raise NumericalFailure(f"symplectic drift {drift:.3g}; increase the grid")
    g = _angles(fam, lams, psi1)

    run = 0
    for k, zero in enumerate(g <= thr):
        run = run + 1 if zero else 0
        if run >= 3:
            raise InvalidInput(f"nontrivial solutions on a whole interval near lambda={lams[k]:.6g}")

    m = len(lams)
    roots, brackets = [], []
    for i in range(m):
        left = g[i - 1] if i > 0 else np.inf
        right = g[i + 1] if i < m - 1 else np.inf
        if not (g[i] <= left and g[i] <= right):
            continue
        # flat stretches away from zero are not minima worth refining
        if g[i] == left and g[i] == right and g[i] > thr:
            continue
        if i in (0, m - 1) and g[i] <= thr:
            roots.append(float(lams[i]))
            continue
        brackets.append((lams[max(i - 1, 0)], lams[min(i + 1, m - 1)]))
    width = 2.0 / (o.sweep_samples - 1)
    iterations = max(1, math.ceil(math.log(width / o.sweep_res) / math.log(8.0)))
    cands = _refine(fam, brackets, iterations)
    if len(cands):
        gc = _angles(fam, cands, _integrate(fam, cands))
        roots.extend(float(x) for x, v in zip(cands, gc) if v <= thr)

    merged = []
    for x in sorted(roots):
        if merged and x - merged[-1] <= 2.0 * o.sweep_res:
            # endpoints win, otherwise keep the first
            if x in (0.0, 1.0):
                merged[-1] = x
            continue
        merged.append(x)

    solutions = []
    if merged:
        arr = np.array(merged)
        psis = _integrate(fam, arr)
        angles = _angles(fam, arr, psis)
        for lam, p, a in zip(merged, psis, angles):
            K = kernel_initial_values(fam, lam, p, o.tol_rank)
            solutions.append(Solution(lam, K.shape[1], K, float(a)))
    mp = pair_maslov(fam, o) if with_maslov else 0
    return SweepReport(solutions, mp, fam.n, sign_hypothesis(fam, tol=o.tol_rank),
                       {"drift": drift, "samples": o.sweep_samples, "candidates": len(brackets)})


def _role(lam: float) -> str:
    return "start" if lam == 0.0 else "end" if lam == 1.0 else "interior"


def crossing_form(fam: HamiltonianFamily, lam: float, u0: np.ndarray, o: Options) -> np.ndarray:
    """``int <dS u, u> dt`` on the solutions starting at the columns of ``u0``, in an L2-orthonormal basis."""
    values = fundamental_solution(fam, lam, o).values
    U = values @ u0  # (grid+1, 2n, k)
    ts = np.linspace(0.0, 1.0, fam.grid + 1)
    dS = np.array([fam.dS(lam, t) for t in ts])
    Ut = np.swapaxes(U, 1, 2)
    gamma = trapezoid(Ut @ dS @ U, ts, axis=0)
    gram = trapezoid(Ut @ U, ts, axis=0)
    L = np.linalg.cholesky(0.5 * (gram + gram.T))
    Linv = np.linalg.inv(L)
    return as_sym(Linv @ gamma @ Linv.T)


def hamiltonian_sfl(fam: HamiltonianFamily, opts: Options | None = None) -> SflReport:
    """Spectral flow of ``J d/dt + S_l`` with constant boundary conditions."""
    o = resolve(opts)
    if not (is_constant_path(fam.bc1) and is_constant_path(fam.bc2)):
        raise InvalidInput("boundary conditions vary with lambda; use maslov_pair_index instead")
    if fam.S_deriv is None:
        raise InvalidInput("hamiltonian_sfl needs S_deriv")
    sweep = sweep_nontrivial(fam, o, with_maslov=False)
    records = []
    for sol in sweep.solutions:
        Q = crossing_form(fam, sol.lam, sol.kernel_frame, o)
        index = quadform_index(Q, o.tol_rank)
        rec = CrossingRecord(sol.lam, sol.kernel_frame, Q, index, not index.degenerate, _role(sol.lam))
        if not rec.regular:
            raise DegenerateCrossing(f"degenerate crossing form at lambda={sol.lam!r}", rec)
        records.append(rec)
    value = sum(r.contribution for r in records)
    return SflReport(value, "hamiltonian", [], records, {"drift": sweep.diagnostics["drift"]})


def reverse_family(fam: HamiltonianFamily) -> HamiltonianFamily:
    S, dS = fam.S, fam.S_deriv
    if fam.vectorized:
        newS = lambda lam, t: S(1.0 - np.asarray(lam), t)
    else:
        newS = lambda lam, t: S(1.0 - lam, t)
    newdS = None if dS is None else (lambda lam, t: -np.asarray(dS(1.0 - lam, t)))
    bc1 = LagrangianPath(fam.n, lambda lam: fam.bc1.eval(1.0 - lam), meta=dict(fam.bc1.meta))
    bc2 = LagrangianPath(fam.n, lambda lam: fam.bc2.eval(1.0 - lam), meta=dict(fam.bc2.meta))
    return HamiltonianFamily(fam.n, newS, bc1, bc2, newdS, fam.grid, fam.vectorized, dict(fam.meta))


# ---------------------------------------------------------------------------
# comparison theorem and the isolated-crossing bound


@dataclass
class Perturbation:
    """``K(lam, t)`` with its lambda-derivative; both may be vectorized like ``S``."""

    fn: Callable
    deriv: Callable | None = None


@dataclass
class ComparisonRecord:
    sfl_K: int
    sfl_Kprime: int
    model: str

    @property
    def holds(self) -> bool:
        return self.sfl_K >= self.sfl_Kprime

    def as_dict(self) -> dict:
        return {"sfl_K": self.sfl_K, "sfl_Kprime": self.sfl_Kprime, "holds": self.holds, "model": self.model}


def _perturbed(fam: HamiltonianFamily, K: Perturbation) -> HamiltonianFamily:
    S, dS = fam.S, fam.S_deriv
    newS = lambda lam, t: np.asarray(S(lam, t)) + np.asarray(K.fn(lam, t))
    newdS = None
    if dS is not None and K.deriv is not None:
        newdS = lambda lam, t: np.asarray(dS(lam, t)) + np.asarray(K.deriv(lam, t))
    return fam.with_S(newS, newdS)


def comparison_check(base, K, Kprime, opts: Options | None = None) -> ComparisonRecord:
    """Check ``sfl(A + K) >= sfl(A + K')`` given ``K'_0 >= K_0`` and ``K_1 >= K'_1``.

    ``base`` is either an :class:`OperatorPath` (with ``K``, ``K'`` paths of the
    same size) or a :class:`HamiltonianFamily` (with :class:`Perturbation` terms).
    """
    o = resolve(opts)
    if isinstance(base, OperatorPath):
        if not (is_psd(Kprime.at(0.0) - K.at(0.0), o.tol_rank) and is_psd(K.at(1.0) - Kprime.at(1.0), o.tol_rank)):
            raise InvalidInput("comparison hypotheses K'_0 >= K_0 and K_1 >= K'_1 do not hold")
        from .specflow import add_paths

        a = sfl_partition(add_paths(base, K), o).value
        b = sfl_partition(add_paths(base, Kprime), o).value
        return ComparisonRecord(a, b, "matrix")
    if not isinstance(base, HamiltonianFamily):
        raise InvalidInput(f"unsupported base {type(base).__name__}")
    for t in np.linspace(0.0, 1.0, 101):
        d0 = np.asarray(Kprime.fn(0.0, t)) - np.asarray(K.fn(0.0, t))
        d1 = np.asarray(K.fn(1.0, t)) - np.asarray(Kprime.fn(1.0, t))
        if not (is_psd(d0.reshape(2 * base.n, 2 * base.n), o.tol_rank)
                and is_psd(d1.reshape(2 * base.n, 2 * base.n), o.tol_rank)):
            raise InvalidInput(f"comparison hypotheses fail at t={t:.3g}")
    a = hamiltonian_sfl(_perturbed(base, K), o).value
    b = hamiltonian_sfl(_perturbed(base, Kprime), o).value
    return ComparisonRecord(a, b, "hamiltonian")


@dataclass
class BoundRecord:
    sfl_abs: int
    kernel_dim: int
    lambda_star: float

    @property
    def holds(self) -> bool:
        return self.sfl_abs <= self.kernel_dim

    def as_dict(self) -> dict:
        return {"sfl_abs": self.sfl_abs, "kernel_dim": self.kernel_dim,
                "lambda_star": self.lambda_star, "holds": self.holds}


def isolated_bound_check(target, lambda_star: float | None = None, opts: Options | None = None) -> BoundRecord:
    """``|sfl| <= dim ker`` at the only crossing of ``target``."""
    o = resolve(opts)
    if isinstance(target, OperatorPath):
        roots, _ = locate_crossings(target, o)
        lams = [lam for lam, _ in roots]
    elif isinstance(target, HamiltonianFamily):
        sweep = sweep_nontrivial(target, o, with_maslov=False)
        lams = [s.lam for s in sweep.solutions]
    else:
        raise InvalidInput(f"unsupported target {type(target).__name__}")
    if len(lams) > 1:
        raise InvalidInput(f"expected a single crossing, found {len(lams)}")
    if not lams:
        return BoundRecord(0, 0, math.nan if lambda_star is None else float(lambda_star))
    lam = lams[0]
    if lambda_star is not None and abs(lam - lambda_star) > max(1e-6, 10 * o.lambda_res):
        raise InvalidInput(f"crossing found at {lam!r}, not at {lambda_star!r}")
    if isinstance(target, OperatorPath):
        kdim = kernel_basis(target.at(lam), o.tol_rank).shape[1]
        value = sfl_partition(target, o).value
    else:
        kdim = kernel_dimension(target, lam, o.tol_rank)
        value = hamiltonian_sfl(target, o).value
    return BoundRecord(abs(value), kdim, lam)
