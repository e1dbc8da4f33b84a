"""Lagrangian subspaces of ``R^{2n}`` and the crossing-form Maslov index.

Conventions: ``J = [[0, -I], [I, 0]]`` and ``omega(u, v) = <Ju, v>``.  A
subspace is represented by a ``2n x n`` frame with orthonormal columns.
Crossings with the reference Lagrangian are located by minimizing the sine of
the smallest principal angle; at each crossing the path is written as a graph
``u + phi_l(u)`` over ``J Lambda(l*)`` and the form ``d/dl omega(u, phi_l u)``
is restricted to the intersection.  Contributions follow the same endpoint
rule as the spectral-flow crossing formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import Options, resolve
from .errors import ContinuumOfCrossings, DegenerateCrossing, InvalidInput, NumericalFailure
from .numerics import QuadFormIndex, as_sym, orthonormalize, quadform_index, singular_values, sym_eig
from .specflow import CrossingRecord, OperatorPath, golden_min, merge_roots, scan_cells


def standard_j(n: int) -> np.ndarray:
    """The ``2n x 2n`` matrix ``[[0, -I], [I, 0]]``."""
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = -np.eye(n)
    J[n:, :n] = np.eye(n)
    return J


@dataclass(frozen=True)
class LagrangianFrame:
    n: int
    frame: np.ndarray

    @property
    def projection(self) -> np.ndarray:
        return self.frame @ self.frame.T


def lagrangian_frame(F, tol: float | None = None) -> LagrangianFrame:
    """Orthonormalize ``F`` and check the Lagrangian condition."""
    o = resolve(None)
    tol = o.tol_orth if tol is None else tol
    Q = orthonormalize(F, o.tol_rank)
    rows, cols = Q.shape
    if rows != 2 * cols:
        raise InvalidInput(f"a Lagrangian frame in R^{rows} needs {rows // 2} columns, got {cols}")
    # isotropy of an orthonormal frame, checked at a scale-aware tolerance
    if np.max(np.abs(Q.T @ standard_j(cols) @ Q)) > max(tol, 1e3 * np.finfo(float).eps):
        raise InvalidInput("frame does not span a Lagrangian subspace")
    return LagrangianFrame(cols, Q)


def is_lagrangian(F, tol: float | None = None) -> bool:
    """True iff ``F`` has orthonormal columns spanning a Lagrangian subspace."""
    tol = resolve(None).tol_orth if tol is None else tol
    F = np.asarray(F, dtype=float)
    if F.ndim == 1:
        F = F[:, None]
    rows, cols = F.shape
    if rows != 2 * cols:
        return False
    ortho = np.max(np.abs(F.T @ F - np.eye(cols))) <= tol
    iso = np.max(np.abs(F.T @ standard_j(cols) @ F)) <= tol
    return bool(ortho and iso)


def _frame(L) -> np.ndarray:
    return L.frame if isinstance(L, LagrangianFrame) else np.asarray(L, dtype=float)


def intersection_dim(L1, L2, tol: float | None = None) -> int:
    """Number of principal angles with ``cos >= 1 - tol``."""
    tol = resolve(None).tol_rank if tol is None else tol
    F1, F2 = _frame(L1), _frame(L2)
    if F1.shape != F2.shape:
        raise InvalidInput(f"frame shape mismatch {F1.shape} vs {F2.shape}")
    cosines = singular_values(F1.T @ F2)
    return int(np.sum(cosines >= 1.0 - tol))


def _sine_threshold(tol: float) -> float:
    return math.sqrt(max(0.0, 2.0 * tol - tol * tol))


def min_sine(F, F0) -> float:
    """Sine of the smallest principal angle between two Lagrangian frames."""
    n = F.shape[1]
    return float(singular_values(F0.T @ standard_j(n) @ F)[-1])


def intersection_basis(F, F0, tol: float) -> np.ndarray:
    """Coordinates (w.r.t. ``F``) of ``span(F) cap span(F0)``, orthonormal columns."""
    n = F.shape[1]
    W = F0.T @ standard_j(n) @ F
    values, vectors = sym_eig(W.T @ W)
    return vectors[:, values <= _sine_threshold(tol) ** 2]


def graph_lagrangian(T) -> LagrangianFrame:
    """Orthonormal frame of ``{(u, Tu)}``."""
    T = as_sym(T)
    n = T.shape[0]
    return LagrangianFrame(n, orthonormalize(np.vstack([np.eye(n), T])))


@dataclass
class LagrangianPath:
    """``l -> span(eval(l))``; ``eval`` may return any ``2n x n`` basis."""

    n: int
    eval: Callable[[float], np.ndarray]
    smoothness_hint: int = 64
    meta: dict = field(default_factory=dict)

    def frame_at(self, lam: float) -> np.ndarray:
        F = np.asarray(self.eval(float(lam)), dtype=float)
        if F.shape != (2 * self.n, self.n):
            raise InvalidInput(f"Lagrangian path evaluated to shape {F.shape}")
        return orthonormalize(F)


def constant_lagrangian_path(L) -> LagrangianPath:
    F = _frame(L)
    return LagrangianPath(F.shape[1], lambda lam: F, meta={"constant": True})


def graph_path(path: OperatorPath) -> LagrangianPath:
    n = path.dim
    return LagrangianPath(n, lambda lam: np.vstack([np.eye(n), path.at(lam)]),
                          path.smoothness_hint)


def concatenate_lagrangian(p1: LagrangianPath, p2: LagrangianPath) -> LagrangianPath:
    if p1.n != p2.n:
        raise InvalidInput("dimension mismatch")
    return LagrangianPath(p1.n, lambda lam: p1.eval(2 * lam) if lam <= 0.5 else p2.eval(2 * lam - 1))


def restrict_lagrangian(p: LagrangianPath, lo: float, hi: float) -> LagrangianPath:
    w = hi - lo
    return LagrangianPath(p.n, lambda lam: p.eval(lo + w * lam), p.smoothness_hint)


@dataclass
class MaslovReport:
    value: int
    crossings: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "crossings": [c.as_dict() for c in sorted(self.crossings, key=lambda c: c.lambda_star)],
            "diagnostics": dict(self.diagnostics),
        }


def _role(lam: float) -> str:
    return "start" if lam == 0.0 else "end" if lam == 1.0 else "interior"


def _graph_map(F_star: np.ndarray, F: np.ndarray) -> np.ndarray:
    # span(F) = {F* a + J F* Phi a}; Phi = B A^{-1}
    J = standard_j(F_star.shape[1])
    A = F_star.T @ F
    B = (J @ F_star).T @ F
    return np.linalg.solve(A.T, B.T).T


def _graph_map_derivative(path: LagrangianPath, lam: float, F_star: np.ndarray, h: float) -> np.ndarray:
    """Least-squares quadratic fit of ``Phi`` on a small window around ``lam``."""
    if lam - 2 * h < 0.0:
        offsets = np.arange(5) * h
    elif lam + 2 * h > 1.0:
        offsets = -np.arange(5)[::-1] * h
    else:
        offsets = np.arange(-2, 3) * h
    phis = np.array([_graph_map(F_star, path.frame_at(lam + d)) for d in offsets])
    V = np.vander(offsets / h, 3, increasing=True)
    coef, *_ = np.linalg.lstsq(V, phis.reshape(len(offsets), -1), rcond=None)
    D = coef[1].reshape(phis.shape[1:]) / h
    return 0.5 * (D + D.T)


def maslov_index(path: LagrangianPath, L0, opts: Options | None = None) -> MaslovReport:
    """Maslov index of ``path`` relative to the fixed Lagrangian ``L0``."""
    o = resolve(opts)
    F0 = _frame(L0)
    if F0.shape != (2 * path.n, path.n):
        raise InvalidInput("reference Lagrangian does not match the path dimension")
    thr = _sine_threshold(o.tol_rank)
    cache: dict[float, tuple] = {}

    def data(lam):
        lam = float(lam)
        hit = cache.get(lam)
        if hit is None:
            F = path.frame_at(lam)
            hit = (F, F @ F.T, min_sine(F, F0))
            cache[lam] = hit
        return hit

    g = lambda lam: data(lam)[2]
    hits = lambda lam: data(lam)[2] <= thr

    def speed(a, b):
        return np.linalg.norm(data(b)[1] - data(a)[1]) / (b - a)

    roots, endpoints = [], []
    for e in (0.0, 1.0):
        if hits(e):
            roots.append(e)
            endpoints.append(e)
    try:
        clusters = scan_cells(g, speed, o, hits)
    except ContinuumOfCrossings as exc:
        rec = _crossing_record(path, exc.lam, data(exc.lam)[0], F0, o)
        raise DegenerateCrossing(f"intersections are not isolated near lambda={exc.lam!r}", rec) from exc
    for lo, hi in clusters:
        x, _ = golden_min(g, lo, hi)
        if hits(x):
            roots.append(x)
    records = []
    for lam in merge_roots(roots, o.lambda_res, endpoints):
        rec = _crossing_record(path, lam, data(lam)[0], F0, o)
        if rec.kernel.shape[1] == 0:
            raise NumericalFailure(f"no intersection found at located crossing {lam!r}", lam=lam)
        if not rec.regular:
            raise DegenerateCrossing(f"degenerate crossing form at lambda={lam!r}", rec)
        records.append(rec)
    value = sum(r.contribution for r in records)
    return MaslovReport(value, records, {"evaluations": len(cache), "n_crossings": len(records)})


def _crossing_record(path, lam, F_star, F0, o: Options) -> CrossingRecord:
    K = intersection_basis(F_star, F0, o.tol_rank)
    D = _graph_map_derivative(path, lam, F_star, o.maslov_window)
    Q = as_sym(K.T @ D @ K) if K.shape[1] else np.zeros((0, 0))
    if K.shape[1]:
        index = quadform_index(Q, o.tol_rank)
    else:
        index = QuadFormIndex(0, 0, False, 0, 0)
    return CrossingRecord(lam, F_star @ K, Q, index, not index.degenerate, _role(lam))


# ---------------------------------------------------------------------------
# pairs of paths


def _conjugation(n: int) -> np.ndarray:
    # (x, y) -> (x, -y) turns omega into -omega
    return np.diag(np.concatenate([np.ones(n), -np.ones(n)]))


def _interleave(n: int) -> np.ndarray:
    # (x1, y1, x2, y2) -> (x1, x2, y1, y2)
    P = np.zeros((4 * n, 4 * n))
    I = np.eye(n)
    P[0:n, 0:n] = I
    P[n:2 * n, 2 * n:3 * n] = I
    P[2 * n:3 * n, n:2 * n] = I
    P[3 * n:4 * n, 3 * n:4 * n] = I
    return P


def _embed_pair(F1: np.ndarray, F2: np.ndarray) -> np.ndarray:
    n = F1.shape[1]
    X = np.zeros((4 * n, 2 * n))
    X[:2 * n, :n] = F1
    X[2 * n:, n:] = _conjugation(n) @ F2
    return _interleave(n) @ X


def _diagonal_frame(n: int) -> np.ndarray:
    D = np.vstack([np.eye(2 * n), _conjugation(n)]) / math.sqrt(2.0)
    return _interleave(n) @ D


def maslov_pair_index(p1: LagrangianPath, p2: LagrangianPath, opts: Options | None = None) -> MaslovReport:
    """Maslov index of the pair ``(Lambda1(l), Lambda2(l))``.

    Computed as the index of ``Lambda1 x Lambda2`` in ``(R^2n, omega) x (R^2n, -omega)``
    against the diagonal, so the crossing form is ``Q_1 - Q_2`` on ``Lambda1 cap Lambda2``.
    """
    if p1.n != p2.n:
        raise InvalidInput(f"dimension mismatch {p1.n} vs {p2.n}")
    n = p1.n
    product = LagrangianPath(2 * n, lambda lam: _embed_pair(p1.frame_at(lam), p2.frame_at(lam)),
                             max(p1.smoothness_hint, p2.smoothness_hint))
    report = maslov_index(product, _diagonal_frame(n), opts)
    back = _interleave(n).T
    for rec in report.crossings:
        # (u, Cu)/sqrt2 -> u
        rec.kernel = math.sqrt(2.0) * (back @ rec.kernel)[:2 * n]
    return report


def sfl_via_maslov(path: OperatorPath, opts: Options | None = None) -> int:
    """Spectral flow as the Maslov index of the graphs against ``R^n x {0}``."""
    return maslov_index(graph_path(path), graph_lagrangian(np.zeros((path.dim, path.dim))), opts).value


def angle_trajectory(path: LagrangianPath, L0, samples: int = 201):
    """Rows ``(lambda, angle_1, ..., angle_n)`` of principal angles to ``L0``."""
    F0 = _frame(L0)
    rows = []
    for lam in np.linspace(0.0, 1.0, samples):
        cosines = np.clip(singular_values(path.frame_at(lam).T @ F0), 0.0, 1.0)
        rows.append([float(lam), *map(float, np.sort(np.arccos(cosines)))])
    return rows


def is_constant_path(path: LagrangianPath, samples: int = 17, tol: float | None = None) -> bool:
    """True if ``path`` is flagged constant or its projections agree on a sample grid."""
    if path.meta.get("constant"):
        return True
    tol = resolve(None).tol_orth if tol is None else tol
    P0 = path.frame_at(0.0)
    P0 = P0 @ P0.T
    for lam in np.linspace(0.0, 1.0, samples)[1:]:
        F = path.frame_at(lam)
        if np.max(np.abs(F @ F.T - P0)) > tol:
            return False
    return True
