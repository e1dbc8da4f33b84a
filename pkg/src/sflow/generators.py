"""Seeded random instances: operator paths, homotopies and Hamiltonian families.

Operator paths are ``U(l)^T D(l) U(l)`` where ``U`` is a product of Givens
rotations with trigonometric angles and ``D`` holds trigonometric eigenvalue
branches.  A branch ``amp * sin(pi (c l + phi))`` with ``phi`` in
``(0.05, 0.95)`` has exactly ``c`` simple zeros in ``(0, 1)``, so the spectral
flow of every generated path is known in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput
from .hamiltonian import HamiltonianFamily, Perturbation
from .maslov import LagrangianPath, constant_lagrangian_path
from .numerics import njit
from .specflow import OperatorPath


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@njit(cache=True)
def _spectral_eval(bp, ri, rp, sig, lam, derivs):
    n = bp.shape[0]
    pi = math.pi
    d = np.empty(n)
    ds = np.empty(n)
    dl = np.empty(n)
    for k in range(n):
        x = pi * (bp[k, 2] * lam + bp[k, 3] + bp[k, 4] * sig)
        d[k] = bp[k, 0] + bp[k, 1] * math.sin(x)
        ds[k] = bp[k, 1] * pi * bp[k, 4] * math.cos(x)
        dl[k] = bp[k, 1] * pi * bp[k, 2] * math.cos(x)
    U = np.eye(n)
    Us = np.zeros((n, n))
    Ul = np.zeros((n, n))
    for r in range(ri.shape[0]):
        i, j = ri[r, 0], ri[r, 1]
        x = pi * (rp[r, 2] * lam + rp[r, 3] + rp[r, 4] * sig)
        th = rp[r, 0] + rp[r, 1] * math.sin(x)
        th_s = rp[r, 1] * pi * rp[r, 4] * math.cos(x)
        th_l = rp[r, 1] * pi * rp[r, 2] * math.cos(x)
        c, sn = math.cos(th), math.sin(th)
        for col in range(n):
            ui, uj = U[i, col], U[j, col]
            if derivs:
                # d(G U) = G' U + G dU
                a, b = Us[i, col], Us[j, col]
                Us[i, col] = c * a - sn * b + th_s * (-sn * ui - c * uj)
                Us[j, col] = sn * a + c * b + th_s * (c * ui - sn * uj)
                a, b = Ul[i, col], Ul[j, col]
                Ul[i, col] = c * a - sn * b + th_l * (-sn * ui - c * uj)
                Ul[j, col] = sn * a + c * b + th_l * (c * ui - sn * uj)
            U[i, col] = c * ui - sn * uj
            U[j, col] = sn * ui + c * uj
    DU = np.empty((n, n))
    for k in range(n):
        DU[k] = d[k] * U[k]
    H = U.T @ DU
    H = 0.5 * (H + H.T)
    if not derivs:
        return H, H, H
    Hs = Us.T @ DU
    Hl = Ul.T @ DU
    Hs = Hs + Hs.T
    Hl = Hl + Hl.T
    for k in range(n):
        DU[k] = ds[k] * U[k]
    Hs = Hs + U.T @ DU
    for k in range(n):
        DU[k] = dl[k] * U[k]
    Hl = Hl + U.T @ DU
    return H, 0.5 * (Hs + Hs.T), 0.5 * (Hl + Hl.T)


@dataclass
class _Bivariate:
    """``off + amp * sin(pi (c l + phi + beta s))`` and its partials."""

    off: float
    amp: float
    c: float
    phi: float
    beta: float = 0.0

    def __call__(self, s, lam):
        x = math.pi * (self.c * lam + self.phi + self.beta * s)
        return (self.off + self.amp * math.sin(x),
                self.amp * math.pi * self.beta * math.cos(x),
                self.amp * math.pi * self.c * math.cos(x))


@dataclass
class SpectralModel:
    """``h(s, l) = U^T D U`` with bivariate branches and rotation angles.

    If ``pinch`` is set, the first argument is replaced by ``4 s l (1 - l)``
    so the edges ``l = 0`` and ``l = 1`` do not depend on ``s``.
    """

    dim: int
    branches: list
    rotations: list  # (i, j, _Bivariate)
    pinch: bool = False

    def _arg(self, s, lam):
        if not self.pinch:
            return s, 1.0, 0.0
        w = 4.0 * lam * (1.0 - lam)
        return s * w, w, 4.0 * s * (1.0 - 2.0 * lam)

    def __post_init__(self):
        self._bp = np.array([[b.off, b.amp, b.c, b.phi, b.beta] for b in self.branches], dtype=float).reshape(-1, 5)
        self._ri = np.array([[i, j] for i, j, _ in self.rotations], dtype=np.int64).reshape(-1, 2)
        self._rp = np.array([[a.off, a.amp, a.c, a.phi, a.beta] for _, _, a in self.rotations],
                            dtype=float).reshape(-1, 5)

    def evaluate(self, s: float, lam: float, derivs: bool = True):
        """Return ``(h, dh/ds, dh/dl)``; the partials are None unless ``derivs``."""
        sig, dsig_ds, dsig_dl = self._arg(s, lam)
        H, Hs, Hl = _spectral_eval(self._bp, self._ri, self._rp, float(sig), float(lam), derivs)
        if not derivs:
            return H, None, None
        # chain rule through the pinched argument
        return H, Hs * dsig_ds, Hl + Hs * dsig_dl

    def lam_path(self, s: float, smoothness_hint: int = 64) -> OperatorPath:
        return OperatorPath(self.dim, lambda lam: self.evaluate(s, lam, False)[0],
                            lambda lam: self.evaluate(s, lam)[2], smoothness_hint)

    def s_path(self, lam: float, smoothness_hint: int = 64) -> OperatorPath:
        return OperatorPath(self.dim, lambda s: self.evaluate(s, lam, False)[0],
                            lambda s: self.evaluate(s, lam)[1], smoothness_hint)


def _rotations(rng, dim: int, count: int, speed: float, beta: float, periodic: bool):
    rots = []
    for _ in range(count):
        i, j = sorted(rng.choice(dim, size=2, replace=False).tolist())
        c = 2.0 * int(rng.integers(1, 3)) if periodic else float(rng.uniform(-speed, speed))
        rots.append((i, j, _Bivariate(float(rng.uniform(-math.pi, math.pi)), float(rng.uniform(0.2, 1.0)),
                                      c, float(rng.uniform(0, 2)), float(rng.uniform(-beta, beta)))))
    return rots


def _split_budget(rng, dim: int, budget: int) -> list:
    counts = [0] * dim
    for _ in range(budget):
        counts[int(rng.integers(dim))] += 1
    return counts


def _crossing_branch(rng, c: int, sign: float, beta: float = 0.0) -> _Bivariate:
    return _Bivariate(0.0, sign * float(rng.uniform(0.5, 2.0)), float(c), float(rng.uniform(0.05, 0.95)), beta)


def _gapped_branch(rng, sign: float) -> _Bivariate:
    # bounded away from zero: |off| >= 0.4 > amp
    return _Bivariate(sign * float(rng.uniform(0.4, 2.0)), float(rng.uniform(0.0, 0.3)),
                      float(rng.uniform(-3, 3)), float(rng.uniform(0, 2)))


def generate_operator_path(seed, dim: int, crossing_budget: int = 3, fixed_spectrum: bool = False,
                           kernel_dim: int = 0) -> OperatorPath:
    """Random smooth symmetric path with a closed-form expected spectral flow in ``meta``.

    ``fixed_spectrum`` freezes ``D`` (with ``kernel_dim`` zero eigenvalues), giving a
    constant-kernel path.
    """
    if dim < 1:
        raise InvalidInput("dim must be positive")
    rng = make_rng(seed)
    signs = rng.choice([-1.0, 1.0], size=dim)
    expected = 0
    branches = []
    if fixed_spectrum:
        for k in range(dim):
            value = 0.0 if k < kernel_dim else signs[k] * float(rng.uniform(0.3, 2.0))
            branches.append(_Bivariate(value, 0.0, 0.0, 0.0))
    else:
        for k, c in enumerate(_split_budget(rng, dim, crossing_budget)):
            if c:
                branches.append(_crossing_branch(rng, c, signs[k]))
                if c % 2:
                    expected -= int(signs[k])
            else:
                branches.append(_gapped_branch(rng, signs[k]))
    rots = _rotations(rng, dim, 2 * dim if dim > 1 else 0, 2.0, 0.0, False) if dim > 1 else []
    model = SpectralModel(dim, branches, rots)
    path = model.lam_path(0.0)
    path.meta.update({"expected_sfl": expected, "crossing_budget": crossing_budget,
                      "fixed_spectrum": fixed_spectrum})
    return path


HOMOTOPY_MODES = ("general", "free-loop", "fixed-edge", "invertible-edge")


@dataclass
class Homotopy:
    model: SpectralModel
    mode: str
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.model.dim

    def __call__(self, s: float, lam: float) -> np.ndarray:
        return self.model.evaluate(s, lam, False)[0]

    def edges(self) -> dict:
        """The four boundary paths: ``bottom = h(0, .)``, ``top = h(1, .)``, ``left = h(., 0)``, ``right = h(., 1)``."""
        m = self.model
        return {"bottom": m.lam_path(0.0), "top": m.lam_path(1.0), "left": m.s_path(0.0), "right": m.s_path(1.0)}


def generate_homotopy(seed, dim: int, mode: str = "general", crossing_budget: int = 3) -> Homotopy:
    """Two-parameter family ``(s, l) -> h(s, l)``.

    * ``free-loop``: ``h(s, 0) = h(s, 1)`` for all ``s``;
    * ``fixed-edge``: ``h(., 0)`` and ``h(., 1)`` are constant;
    * ``invertible-edge``: ``h(s, 0)`` and ``h(s, 1)`` are invertible for all ``s``.
    """
    if mode not in HOMOTOPY_MODES:
        raise InvalidInput(f"unknown homotopy mode {mode!r}")
    rng = make_rng(seed)
    signs = rng.choice([-1.0, 1.0], size=dim)
    counts = _split_budget(rng, dim, crossing_budget)
    branches = []
    for k, c in enumerate(counts):
        if mode == "free-loop":
            # even frequency keeps each branch periodic in l
            b = _Bivariate(float(rng.uniform(-0.5, 0.5)), signs[k] * float(rng.uniform(0.5, 2.0)),
                           2.0 * max(1, (c + 1) // 2), float(rng.uniform(0, 2)), float(rng.uniform(-1, 1)))
        elif mode == "invertible-edge":
            # phase stays in (0.1, 0.9) for every s, so l = 0 and l = 1 are never crossings
            b = _Bivariate(0.0, signs[k] * float(rng.uniform(0.5, 2.0)), float(c),
                           float(rng.uniform(0.45, 0.55)), float(rng.uniform(-0.3, 0.3)))
        elif c:
            b = _crossing_branch(rng, c, signs[k], float(rng.uniform(-1.5, 1.5)))
        else:
            b = _Bivariate(signs[k] * float(rng.uniform(0.1, 1.0)), float(rng.uniform(0.3, 1.5)),
                           float(rng.uniform(-2, 2)), float(rng.uniform(0, 2)), float(rng.uniform(-1.5, 1.5)))
        branches.append(b)
    periodic = mode == "free-loop"
    rots = _rotations(rng, dim, 2 * dim, 2.0, 1.0, periodic) if dim > 1 else []
    model = SpectralModel(dim, branches, rots, pinch=(mode == "fixed-edge"))
    return Homotopy(model, mode, {"crossing_budget": crossing_budget})


def random_orthogonal(rng, dim: int) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((dim, dim)))
    return Q * np.sign(np.diag(R))


def random_symmetric(rng, dim: int, scale: float = 1.0) -> np.ndarray:
    A = rng.standard_normal((dim, dim)) * scale
    return 0.5 * (A + A.T)


def random_psd(rng, dim: int, rank: int | None = None, scale: float = 1.0) -> np.ndarray:
    rank = dim if rank is None else rank
    B = rng.standard_normal((dim, rank)) * scale
    return B @ B.T


def np_path(dim: int = 3, rng=None) -> OperatorPath:
    """``(l - 1/2) P + (I - P) T0 (I - P)`` with ``P`` rank one and ``T0`` an involution; spectral flow 1."""
    if dim < 1:
        raise InvalidInput("dim must be positive")
    T0 = np.diag([1.0] + [1.0 if k % 2 == 0 else -1.0 for k in range(dim - 1)])
    Q = np.eye(dim) if rng is None else random_orthogonal(make_rng(rng), dim)
    P = Q[:, :1] @ Q[:, :1].T
    Tq = Q @ T0 @ Q.T
    rest = (np.eye(dim) - P) @ Tq @ (np.eye(dim) - P)
    path = OperatorPath(dim, lambda lam: (lam - 0.5) * P + rest, lambda lam: P.copy())
    path.meta["expected_sfl"] = 1
    return path


def random_lagrangian(rng, n: int) -> np.ndarray:
    """Frame ``[Re U; Im U]`` for a random unitary ``U``."""
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    U, _ = np.linalg.qr(Z)
    return np.vstack([U.real, U.imag])


def rotating_lagrangian(n: int, base: np.ndarray, rates, offsets=None) -> LagrangianPath:
    """``l -> diag(exp(i theta_k(l))) applied to the unitary frame base``, ``theta_k = rate_k l + offset_k``.

    Positive rates make every crossing form positive definite.
    """
    rates = np.asarray(rates, dtype=float)
    offsets = np.zeros(n) if offsets is None else np.asarray(offsets, dtype=float)
    U0 = base[:n] + 1j * base[n:]

    def ev(lam):
        U = U0 @ np.diag(np.exp(1j * (rates * lam + offsets)))
        return np.vstack([U.real, U.imag])

    return LagrangianPath(n, ev)


def rotation_family(n: int = 1, rate: float = 3 * math.pi, grid: int = 1000) -> HamiltonianFamily:
    """``S_l = rate * l * I`` with both boundary conditions equal to the horizontal Lagrangian."""
    d = 2 * n
    horiz = constant_lagrangian_path(np.vstack([np.eye(n), np.zeros((n, n))]))
    S = lambda lam, t: rate * np.asarray(lam, dtype=float)[..., None, None] * np.eye(d)
    dS = lambda lam, t: rate * np.eye(d)
    return HamiltonianFamily(n, S, horiz, horiz, dS, grid, vectorized=True, meta={"expected_sfl": 3})


def rotating_boundary_family(eps: float = 0.5, turns: float = 3.0, grid: int = 1000) -> HamiltonianFamily:
    """n = 1: ``Lambda1`` turns by ``turns * pi``, ``Lambda2 = span(e1)``, ``S_l = eps (l - 1/2) I``."""
    e1 = np.array([[1.0], [0.0]])
    rot = LagrangianPath(1, lambda lam: np.array([[math.cos(turns * math.pi * lam)], [math.sin(turns * math.pi * lam)]]))
    S = lambda lam, t: eps * (np.asarray(lam, dtype=float)[..., None, None] - 0.5) * np.eye(2)
    dS = lambda lam, t: eps * np.eye(2)
    return HamiltonianFamily(1, S, rot, constant_lagrangian_path(e1), dS, grid, vectorized=True)


def _time_field(rng, d: int, kind: str = "psd", scale: float = 1.0):
    """``t -> A + t B`` (``kind="sym"``) or ``t -> P0 + t P1`` with PSD terms (``kind="psd"``)."""
    if kind == "psd":
        A, B = random_psd(rng, d, scale=scale / math.sqrt(d)), random_psd(rng, d, scale=scale / math.sqrt(d))
    else:
        A, B = random_symmetric(rng, d, scale), random_symmetric(rng, d, scale)
    return A, B


def sign_hypothesis_family(seed, n: int = 1, grid: int = 400) -> HamiltonianFamily:
    """Random instance of the count-bound setting.

    ``Lambda1`` is a positive rotation of a random Lagrangian, ``Lambda2`` a fixed
    random Lagrangian and ``S_l = (l - 1/2) eps (P0 + t P1)`` with PSD ``P0, P1``,
    so ``S_0 <= 0 <= S_1``.
    """
    rng = make_rng(seed)
    d = 2 * n
    base1, base2 = random_lagrangian(rng, n), random_lagrangian(rng, n)
    rates = rng.uniform(1.0, 3.0 * math.pi, size=n)
    bc1 = rotating_lagrangian(n, base1, rates)
    bc2 = constant_lagrangian_path(base2)
    eps = float(rng.uniform(0.1, 1.5))
    P0, P1 = _time_field(rng, d, "psd", 1.0)

    def S(lam, t):
        lam = np.asarray(lam, dtype=float)
        return eps * (lam[..., None, None] - 0.5) * (P0 + t * P1)

    dS = lambda lam, t: eps * (P0 + t * P1)
    return HamiltonianFamily(n, S, bc1, bc2, dS, grid, vectorized=True, meta={"seed": repr(seed)})


def comparison_family(seed, n: int = 1, grid: int = 400):
    """Hamiltonian comparison instance ``(base, K, K')``.

    The base has constant boundary conditions and ``dS/dl = gamma I`` large
    enough that every crossing of ``S + K`` and ``S + K'`` is positive definite.
    ``K'`` adds ``(1 - l) Q0 - l Q1`` with PSD ``Q0, Q1`` to ``K``.
    """
    rng = make_rng(seed)
    d = 2 * n
    bc1 = constant_lagrangian_path(random_lagrangian(rng, n))
    bc2 = constant_lagrangian_path(random_lagrangian(rng, n))
    A, B = _time_field(rng, d, "sym", 0.5)
    K0, K1 = _time_field(rng, d, "sym", 0.5)
    Q0, Q1 = _time_field(rng, d, "psd", 0.5)
    pert = max(np.linalg.norm(M, 2) for M in (A, B, K0, K1, Q0, Q1))
    gamma = float(rng.uniform(2.0, 4.0 * math.pi)) + 6.0 * pert

    def S(lam, t):
        lam = np.asarray(lam, dtype=float)[..., None, None]
        return gamma * lam * np.eye(d) + A + t * B

    base = HamiltonianFamily(n, S, bc1, bc2, lambda lam, t: gamma * np.eye(d), grid, vectorized=True)

    def K(lam, t):
        lam = np.asarray(lam, dtype=float)[..., None, None]
        return lam * (K1 + t * B) + (1 - lam) * K0

    dK = lambda lam, t: K1 + t * B - K0

    def Kp(lam, t):
        lam_ = np.asarray(lam, dtype=float)[..., None, None]
        return K(lam, t) + (1 - lam_) * Q0 - lam_ * Q1

    dKp = lambda lam, t: dK(lam, t) - Q0 - Q1
    return base, Perturbation(K, dK), Perturbation(Kp, dKp)


def single_crossing_path(seed, dim: int, max_mult: int = 3) -> OperatorPath:
    """Path whose only singular parameter is an interior ``l*`` with a ``k``-dimensional kernel.

    ``k`` branches vanish linearly at ``l*`` with random slopes of either sign;
    the rest stay away from zero.
    """
    rng = make_rng(seed)
    lam_star = float(rng.uniform(0.15, 0.85))
    k = int(rng.integers(1, min(dim, max_mult) + 1))
    branches = []
    for idx in range(dim):
        if idx < k:
            c = float(rng.uniform(0.3, 0.55)) * float(rng.choice([-1.0, 1.0]))
            # sin(pi c (l - l*)) has its only zero in [0, 1] at l*
            branches.append(_Bivariate(0.0, float(rng.uniform(0.5, 2.0)), c, -c * lam_star))
        else:
            branches.append(_gapped_branch(rng, float(rng.choice([-1.0, 1.0]))))
    rots = _rotations(rng, dim, 2 * dim, 2.0, 0.0, False) if dim > 1 else []
    path = SpectralModel(dim, branches, rots).lam_path(0.0)
    path.meta.update({"lambda_star": lam_star, "kernel_dim": k})
    return path
