"""Gap distance between symmetric matrices viewed as operators.

The gap distance is the operator-norm distance between the orthogonal
projections onto the graphs ``{(u, Mu)}`` in ``R^n x R^n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput
from .numerics import as_sym, operator_norm

PERTURBATION_CONSTANT = 2.0 * math.sqrt(2.0)


@dataclass(frozen=True)
class GraphProjection:
    dim: int
    proj: np.ndarray


def graph_projection(M) -> GraphProjection:
    """Orthogonal projection onto ``gra(M)``: ``G (G^T G)^{-1} G^T`` with ``G = (I; M)``."""
    M = as_sym(M)
    n = M.shape[0]
    G = np.vstack([np.eye(n), M])
    gram = np.eye(n) + M @ M
    P = G @ np.linalg.solve(gram, G.T)
    return GraphProjection(n, 0.5 * (P + P.T))


def _pair(T, S):
    T, S = as_sym(T), as_sym(S)
    if T.shape != S.shape:
        raise InvalidInput(f"dimension mismatch {T.shape[0]} vs {S.shape[0]}")
    return T, S


def gap_distance(T, S) -> float:
    T, S = _pair(T, S)
    return operator_norm(graph_projection(T).proj - graph_projection(S).proj)


def gap_delta(T, S) -> float:
    """One-sided gap: the largest distance from a unit vector of ``gra(T)`` to ``gra(S)``."""
    T, S = _pair(T, S)
    PT = graph_projection(T).proj
    PS = graph_projection(S).proj
    return operator_norm((np.eye(2 * T.shape[0]) - PS) @ PT)


@dataclass(frozen=True)
class InequalityCheck:
    lhs: float
    rhs: float
    slack: float
    holds: bool

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else (0.0 if self.lhs == 0 else math.inf)

    def as_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "slack": self.slack, "holds": self.holds}


def perturbation_inequality_check(T, S, A, B, atol: float = 1e-9) -> InequalityCheck:
    """Check ``d(T+A, S+B) <= 2 sqrt2 sqrt(1+|A|^2) sqrt(1+|B|^2) (d(T,S) + |A-B|)``."""
    T, S = _pair(T, S)
    A, B = _pair(A, B)
    if A.shape != T.shape:
        raise InvalidInput("perturbations must match the operator dimension")
    lhs = gap_distance(T + A, S + B)
    na, nb = operator_norm(A), operator_norm(B)
    rhs = (PERTURBATION_CONSTANT * math.sqrt(1 + na * na) * math.sqrt(1 + nb * nb)
           * (gap_distance(T, S) + operator_norm(A - B)))
    return InequalityCheck(lhs, rhs, rhs - lhs, lhs <= rhs + atol)
