"""Dense symmetric linear algebra on small matrices.

Everything here is built on one cyclic Jacobi eigensolver so that results are
bit-reproducible for identical inputs.  Matrices are plain ``numpy`` arrays;
:func:`as_sym` is the single entry point that validates and symmetrizes them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .config import resolve
from .errors import InvalidInput, NumericalFailure

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


MAX_SWEEPS = 60


class EigDecomp(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class QuadFormIndex:
    morse_index: int
    signature: int
    degenerate: bool
    n_pos: int
    n_zero: int

    @property
    def n_neg(self) -> int:
        return self.morse_index

    def as_dict(self) -> dict:
        return {
            "morse_index": self.morse_index,
            "signature": self.signature,
            "degenerate": self.degenerate,
            "n_pos": self.n_pos,
            "n_zero": self.n_zero,
        }


def as_sym(M) -> np.ndarray:
    """Return ``(M + M^T)/2`` as a float array after validating shape."""
    A = np.array(M, dtype=float, copy=True)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise InvalidInput(f"expected a nonempty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInput("matrix has non-finite entries")
    return 0.5 * (A + A.T)


@njit(cache=True)
def _jacobi(a, want_vectors, max_sweeps):
    n = a.shape[0]
    v = np.eye(n)
    normf = 0.0
    for i in range(n):
        for j in range(n):
            normf += a[i, j] * a[i, j]
    normf = np.sqrt(normf)
    if normf == 0.0:
        return a, v, 0
    thresh = 1e-15 * normf
    for sweep in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= thresh:
                    continue
                rotated = True
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                if want_vectors:
                    for k in range(n):
                        vkp = v[k, p]
                        vkq = v[k, q]
                        v[k, p] = c * vkp - s * vkq
                        v[k, q] = s * vkp + c * vkq
        if not rotated:
            return a, v, sweep + 1
    return a, v, -1


def _run_jacobi(A: np.ndarray, want_vectors: bool):
    a, v, sweeps = _jacobi(np.ascontiguousarray(A, dtype=np.float64), want_vectors, MAX_SWEEPS)
    if sweeps < 0:
        raise NumericalFailure(f"Jacobi iteration did not converge in {MAX_SWEEPS} sweeps")
    values = np.diag(a).copy()
    order = np.argsort(values, kind="stable")
    return values[order], v[:, order]


def sym_eig(M) -> EigDecomp:
    """Full eigendecomposition with ascending eigenvalues."""
    values, vectors = _run_jacobi(as_sym(M), True)
    return EigDecomp(values, vectors)


def sym_eigvals(M) -> np.ndarray:
    """Ascending eigenvalues only (skips accumulating the rotations)."""
    values, _ = _run_jacobi(as_sym(M), False)
    return values


def scale_of(values) -> float:
    """``max(1, ||M||)`` from the eigenvalues of a symmetric ``M``."""
    values = np.asarray(values)
    if values.size == 0:
        return 1.0
    return max(1.0, float(np.max(np.abs(values))))


def kernel_basis(M, tol_rank: float | None = None) -> np.ndarray:
    """Orthonormal frame of the numerical kernel; shape ``(dim, k)``, maybe ``k = 0``."""
    tol_rank = resolve(None).tol_rank if tol_rank is None else tol_rank
    if tol_rank <= 0:
        raise InvalidInput("tol_rank must be positive")
    values, vectors = sym_eig(M)
    mask = np.abs(values) <= tol_rank * scale_of(values)
    return vectors[:, mask]


def singular_values(W) -> np.ndarray:
    """Singular values of a rectangular matrix, descending.

    Uses the eigenvalues of the augmented matrix ``[[0, W], [W^T, 0]]`` so
    that small singular values carry absolute (not squared) accuracy.
    """
    W = np.atleast_2d(np.asarray(W, dtype=float))
    m, k = W.shape
    if m == 0 or k == 0:
        return np.zeros(0)
    aug = np.zeros((m + k, m + k))
    aug[:m, m:] = W
    aug[m:, :m] = W.T
    values = sym_eigvals(aug)
    top = values[::-1][: min(m, k)]
    return np.maximum(top, 0.0)


def operator_norm(M) -> float:
    """Largest singular value of a (possibly rectangular) matrix."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0.0
    if not np.all(np.isfinite(M)):
        raise InvalidInput("matrix has non-finite entries")
    if M.shape[0] == M.shape[1] and np.array_equal(M, M.T):
        return float(np.max(np.abs(sym_eigvals(M))))
    return float(singular_values(M)[0])


def quadform_index(Q, tol_rank: float | None = None) -> QuadFormIndex:
    """Morse index, signature and degeneracy of a symmetric form."""
    tol_rank = resolve(None).tol_rank if tol_rank is None else tol_rank
    if tol_rank <= 0:
        raise InvalidInput("tol_rank must be positive")
    values = sym_eigvals(Q)
    thr = tol_rank * scale_of(values)
    n_neg = int(np.sum(values < -thr))
    n_pos = int(np.sum(values > thr))
    n_zero = len(values) - n_neg - n_pos
    return QuadFormIndex(n_neg, n_pos - n_neg, n_zero > 0, n_pos, n_zero)


def orthonormalize(F, tol_rank: float | None = None) -> np.ndarray:
    """Orthonormal frame with the same column span (Gram-Schmidt, twice)."""
    tol_rank = resolve(None).tol_rank if tol_rank is None else tol_rank
    F = np.array(F, dtype=float, copy=True)
    if F.ndim == 1:
        F = F[:, None]
    if not np.all(np.isfinite(F)):
        raise InvalidInput("frame has non-finite entries")
    rows, cols = F.shape
    if cols > rows:
        raise InvalidInput(f"{cols} columns cannot be independent in dimension {rows}")
    scale = max(1.0, operator_norm(F)) if F.size else 1.0
    Q = np.zeros_like(F)
    for j in range(cols):
        v = F[:, j].copy()
        for _ in range(2):
            v -= Q[:, :j] @ (Q[:, :j].T @ v)
        nv = np.linalg.norm(v)
        if nv <= tol_rank * scale:
            raise InvalidInput(f"column {j} is numerically dependent on the previous ones")
        Q[:, j] = v / nv
    return Q


def is_psd(M, tol_rank: float | None = None) -> bool:
    tol_rank = resolve(None).tol_rank if tol_rank is None else tol_rank
    values = sym_eigvals(M)
    return bool(values[0] >= -tol_rank * scale_of(values))

