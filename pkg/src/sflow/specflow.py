"""Spectral flow of paths of symmetric matrices.

Two independent routes are provided:

* :func:`sfl_partition` evaluates the window/partition definition: the unit
  interval is cut into segments, each carrying a window radius ``a`` such that
  no eigenvalue touches ``+-a`` on the segment, and the flow is the sum of the
  changes in the number of eigenvalues in ``[0, a]``.
* :func:`sfl_crossings` locates the parameters where the matrix is singular
  and adds up signatures of the crossing forms ``B^T A'(l) B``, with the
  one-sided rules at the two endpoints.

The remaining functions build and transform paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .config import Options, resolve
from .errors import ContinuumOfCrossings, DegenerateCrossing, InvalidInput, NumericalFailure
from .numerics import (
    QuadFormIndex,
    as_sym,
    kernel_basis,
    quadform_index,
    scale_of,
    sym_eig,
    sym_eigvals,
)

Matrix = np.ndarray


@dataclass
class OperatorPath:
    """A continuous family ``l -> eval(l)`` of symmetric matrices on ``[0, 1]``."""

    dim: int
    eval: Callable[[float], Matrix]
    deriv: Optional[Callable[[float], Matrix]] = None
    smoothness_hint: int = 64
    meta: dict = field(default_factory=dict)

    def at(self, lam: float) -> Matrix:
        M = as_sym(self.eval(float(lam)))
        if M.shape != (self.dim, self.dim):
            raise InvalidInput(f"path evaluated to shape {M.shape}, expected dim {self.dim}")
        return M

    def deriv_at(self, lam: float) -> Matrix:
        if self.deriv is None:
            raise InvalidInput("path carries no derivative")
        return as_sym(self.deriv(float(lam)))

    @property
    def differentiable(self) -> bool:
        return self.deriv is not None


@dataclass
class WindowSegment:
    lambda_lo: float
    lambda_hi: float
    a: float
    count_lo: int
    count_hi: int

    def as_dict(self) -> dict:
        return {
            "lambda_lo": self.lambda_lo,
            "lambda_hi": self.lambda_hi,
            "a": self.a,
            "count_lo": self.count_lo,
            "count_hi": self.count_hi,
        }


@dataclass
class CrossingRecord:
    lambda_star: float
    kernel: Matrix
    form: Matrix
    index: QuadFormIndex
    regular: bool
    role: str = "interior"  # "start", "interior" or "end"

    @property
    def contribution(self) -> int:
        if self.role == "start":
            return -self.index.morse_index
        if self.role == "end":
            return self.index.n_pos
        return self.index.signature

    def as_dict(self) -> dict:
        return {
            "lambda_star": self.lambda_star,
            "role": self.role,
            "kernel_dim": int(self.kernel.shape[1]),
            "form": np.asarray(self.form).tolist(),
            "index": self.index.as_dict(),
            "regular": self.regular,
            "contribution": self.contribution if self.regular else None,
        }


@dataclass
class SflReport:
    value: int
    method: str
    segments: list = field(default_factory=list)
    crossings: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "method": self.method,
            "segments": [s.as_dict() for s in self.segments],
            "crossings": [c.as_dict() for c in sorted(self.crossings, key=lambda c: c.lambda_star)],
            "diagnostics": dict(self.diagnostics),
        }


# ---------------------------------------------------------------------------
# path algebra


def constant_path(M, smoothness_hint: int = 64) -> OperatorPath:
    M = as_sym(M)
    Z = np.zeros_like(M)
    return OperatorPath(M.shape[0], lambda lam: M, lambda lam: Z, smoothness_hint)


def from_function(fn, dim: int, deriv=None, smoothness_hint: int = 64) -> OperatorPath:
    return OperatorPath(dim, fn, deriv, smoothness_hint)


def restrict(p: OperatorPath, lo: float, hi: float) -> OperatorPath:
    """The sub-path on ``[lo, hi]``, reparametrized to ``[0, 1]``."""
    if not 0.0 <= lo <= 1.0 or not 0.0 <= hi <= 1.0 or lo == hi:
        raise InvalidInput(f"bad restriction interval [{lo}, {hi}]")
    w = hi - lo
    deriv = None
    if p.deriv is not None:
        deriv = lambda lam: w * p.deriv(lo + w * lam)
    return OperatorPath(p.dim, lambda lam: p.eval(lo + w * lam), deriv,
                        p.smoothness_hint, dict(p.meta, restricted=(lo, hi)))


def concatenate(p1: OperatorPath, p2: OperatorPath, tol_orth: float | None = None) -> OperatorPath:
    """Run ``p1`` on ``[0, 1/2]`` and ``p2`` on ``[1/2, 1]``.

    At the junction the derivative is the left one.
    """
    tol_orth = resolve(None).tol_orth if tol_orth is None else tol_orth
    if p1.dim != p2.dim:
        raise InvalidInput(f"dimension mismatch {p1.dim} vs {p2.dim}")
    end, start = p1.at(1.0), p2.at(0.0)
    if np.max(np.abs(end - start)) > tol_orth * scale_of(sym_eigvals(end)):
        raise InvalidInput("endpoint of the first path differs from the start of the second")

    def ev(lam):
        return p1.eval(2 * lam) if lam <= 0.5 else p2.eval(2 * lam - 1)

    deriv = None
    if p1.deriv is not None and p2.deriv is not None:
        deriv = lambda lam: 2 * p1.deriv(2 * lam) if lam <= 0.5 else 2 * p2.deriv(2 * lam - 1)
    return OperatorPath(p1.dim, ev, deriv, max(p1.smoothness_hint, p2.smoothness_hint))


def reverse(p: OperatorPath) -> OperatorPath:
    deriv = None
    if p.deriv is not None:
        deriv = lambda lam: -p.deriv(1.0 - lam)
    return OperatorPath(p.dim, lambda lam: p.eval(1.0 - lam), deriv, p.smoothness_hint)


def add_paths(p: OperatorPath, q: OperatorPath) -> OperatorPath:
    """Pointwise sum ``l -> p(l) + q(l)``."""
    if p.dim != q.dim:
        raise InvalidInput(f"dimension mismatch {p.dim} vs {q.dim}")
    deriv = None
    if p.deriv is not None and q.deriv is not None:
        deriv = lambda lam: p.deriv(lam) + q.deriv(lam)
    return OperatorPath(p.dim, lambda lam: p.eval(lam) + q.eval(lam), deriv,
                        max(p.smoothness_hint, q.smoothness_hint))


def _riesz_scalar(mu):
    return mu / np.sqrt(1.0 + mu * mu)


def riesz_transform(M) -> Matrix:
    """``M (I + M^2)^{-1/2}``; same eigenvectors, eigenvalues squashed into (-1, 1)."""
    values, vectors = sym_eig(M)
    out = (vectors * _riesz_scalar(values)) @ vectors.T
    return 0.5 * (out + out.T)


def _riesz_derivative(M, dM) -> Matrix:
    # Daleckii-Krein: first divided differences of f in the eigenbasis of M
    values, V = sym_eig(M)
    f = _riesz_scalar(values)
    fprime = (1.0 + values * values) ** -1.5
    diff = values[:, None] - values[None, :]
    same = np.abs(diff) <= 1e-12 * scale_of(values)
    with np.errstate(divide="ignore", invalid="ignore"):
        divided = np.where(same, 0.5 * (fprime[:, None] + fprime[None, :]),
                           (f[:, None] - f[None, :]) / np.where(same, 1.0, diff))
    out = V @ (divided * (V.T @ as_sym(dM) @ V)) @ V.T
    return 0.5 * (out + out.T)


def riesz_path(p: OperatorPath) -> OperatorPath:
    """Pointwise Riesz transform of a path."""
    deriv = None
    if p.deriv is not None:
        deriv = lambda lam: _riesz_derivative(p.eval(lam), p.deriv(lam))
    return OperatorPath(p.dim, lambda lam: riesz_transform(p.eval(lam)), deriv, p.smoothness_hint)


def normalization_delta(T, tol_rank: float | None = None) -> float:
    """Half the smallest nonzero eigenvalue modulus of ``T``."""
    tol_rank = resolve(None).tol_rank if tol_rank is None else tol_rank
    values = sym_eigvals(T)
    nonzero = np.abs(values)[np.abs(values) > tol_rank * scale_of(values)]
    if nonzero.size == 0:
        raise InvalidInput("T has no nonzero eigenvalue")
    return 0.5 * float(nonzero.min())


def normalization_path(T, half: bool = False, tol_rank: float | None = None) -> OperatorPath:
    """``t -> T + t I`` for ``t`` in ``[-delta, delta]`` (or ``[0, delta]`` if ``half``)."""
    T = as_sym(T)
    delta = normalization_delta(T, tol_rank)
    n = T.shape[0]
    I = np.eye(n)
    lo = 0.0 if half else -delta
    width = delta - lo
    return OperatorPath(
        n,
        lambda lam: T + (lo + width * lam) * I,
        lambda lam: width * I,
        meta={"delta": delta, "half": half},
    )


# ---------------------------------------------------------------------------
# partition / window method


class _EigCache:
    def __init__(self, path: OperatorPath):
        self.path = path
        self.values: dict[float, np.ndarray] = {}

    def __call__(self, lam: float) -> np.ndarray:
        lam = float(lam)
        v = self.values.get(lam)
        if v is None:
            v = sym_eigvals(self.path.at(lam))
            self.values[lam] = v
        return v


def _count_window(values: np.ndarray, a: float, tol_rank: float) -> int:
    # eigenvalues within the zero tolerance are treated as 0 and belong to [0, a]
    zero = tol_rank * scale_of(values)
    return int(np.sum((values >= -zero) & (values <= a)))


def _choose_window(E: np.ndarray, margin: float, a_floor: float):
    """Smallest certified window radius for sampled eigenvalues ``E`` (samples x dim).

    Returns ``(a, cap)``; ``cap`` bounds the radius from the eigenvalues that
    stay outside the window.
    """
    lo_v = np.minimum(E[:-1], E[1:])
    hi_v = np.maximum(E[:-1], E[1:])
    straddle = (lo_v <= 0.0) & (hi_v >= 0.0)
    lo_abs = np.where(straddle, 0.0, np.minimum(np.abs(lo_v), np.abs(hi_v)))
    hi_abs = np.maximum(np.abs(lo_v), np.abs(hi_v))
    starts = (lo_abs / (1.0 + margin)).ravel()
    ends = (hi_abs / (1.0 - margin)).ravel()
    order = np.argsort(starts, kind="stable")
    cand = a_floor
    a = None
    for s, e in zip(starts[order], ends[order]):
        if e < cand:
            continue
        if s > cand:
            a = math.sqrt(cand * s)
            break
        cand = max(cand, e) * (1.0 + 1e-12)
    if a is None:
        a = 2.0 * cand
    branch_min = np.min(np.abs(E), axis=0)
    no_sign_change = np.all(E > 0, axis=0) | np.all(E < 0, axis=0)
    exterior = branch_min[no_sign_change & (branch_min > a * (1.0 + margin))]
    cap = 0.5 * float(np.median(exterior)) if exterior.size else math.inf
    return a, cap


def sfl_partition(path: OperatorPath, opts: Options | None = None) -> SflReport:
    """Spectral flow from an adaptively refined, window-certified partition."""
    o = resolve(opts)
    report = _partition(path, o, o.samples or path.smoothness_hint)
    if o.verify_doubling:
        check = _partition(path, o, 2 * (o.samples or path.smoothness_hint))
        report.diagnostics["doubling_value"] = check.value
        if check.value != report.value:
            raise NumericalFailure(
                f"partition value {report.value} changed to {check.value} under doubled sampling")
    return report


def _partition(path: OperatorPath, o: Options, samples: int) -> SflReport:
    samples = max(3, int(samples))
    eig = _EigCache(path)
    segments: list[WindowSegment] = []
    max_depth_seen = 0

    def visit(lo, hi, depth):
        nonlocal max_depth_seen
        max_depth_seen = max(max_depth_seen, depth)
        lams = np.linspace(lo, hi, samples)
        E = np.array([eig(l) for l in lams])
        a_floor = 10.0 * o.tol_rank * scale_of(E)
        a, cap = _choose_window(E, o.margin, a_floor)
        if a <= cap:
            segments.append(WindowSegment(
                float(lo), float(hi), a,
                _count_window(eig(lo), a, o.tol_rank),
                _count_window(eig(hi), a, o.tol_rank)))
            return
        if depth >= o.max_depth:
            raise NumericalFailure(
                f"no certified spectral window near lambda={0.5 * (lo + hi):.6g}",
                lam=0.5 * (lo + hi))
        mid = 0.5 * (lo + hi)
        visit(lo, mid, depth + 1)
        visit(mid, hi, depth + 1)

    visit(0.0, 1.0, 0)
    value = sum(s.count_hi - s.count_lo for s in segments)
    return SflReport(value, "partition", segments=segments, diagnostics={
        "samples_per_segment": samples,
        "evaluations": len(eig.values),
        "refinement_depth": max_depth_seen,
        "n_segments": len(segments),
    })


# ---------------------------------------------------------------------------
# crossing method


def golden_min(f, lo: float, hi: float, xtol: float = 0.0, maxiter: int = 200):
    """Golden-section search for a minimum of ``f`` on ``[lo, hi]``.

    Returns the best evaluated ``(x, f(x))``, endpoints included.
    """
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    best = min(((lo, f(lo)), (hi, f(hi))), key=lambda t: t[1])
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(maxiter):
        if b - a <= max(xtol, 4e-16 * max(1.0, abs(a), abs(b))):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    for x, fx in ((c, fc), (d, fd)):
        if fx < best[1]:
            best = (x, fx)
    return best


def scan_cells(g, speed, o: Options, is_zero=None, max_cells: int = 200_000):
    """Recursive exclusion scan of ``[0, 1]``.

    ``g(l) >= 0`` vanishes exactly at crossings and ``speed(a, b)`` bounds
    ``|g'|`` on ``[a, b]``.  Cells where ``g`` provably stays positive are
    dropped; the survivors narrower than ``o.min_cell`` are merged into
    clusters ``[lo, hi]`` and returned.  Three consecutive grid points on
    which ``is_zero`` holds are reported as a continuum of crossings.
    """
    grid = np.linspace(0.0, 1.0, o.scan_samples + 1)
    if is_zero is not None:
        run = 0
        for lam in grid:
            run = run + 1 if is_zero(float(lam)) else 0
            if run >= 3:
                raise ContinuumOfCrossings(
                    f"crossings fill an interval around lambda={lam:.6g}", lam=float(lam))
    pending = [(float(grid[i]), float(grid[i + 1])) for i in range(o.scan_samples)]
    final = []
    while pending:
        nxt = []
        for a, b in pending:
            bound = o.speed_safety * speed(a, b) * (b - a)
            if max(g(a), g(b)) > bound:
                continue
            if b - a <= o.min_cell:
                final.append((a, b))
            else:
                m = 0.5 * (a + b)
                nxt.extend(((a, m), (m, b)))
        if len(nxt) > max_cells:
            raise NumericalFailure("crossing scan does not localize; too many candidate cells")
        pending = nxt
    final.sort()
    clusters = []
    for a, b in final:
        if clusters and clusters[-1][1] >= a:
            clusters[-1][1] = max(clusters[-1][1], b)
        else:
            clusters.append([a, b])
    return [(a, b) for a, b in clusters]


def merge_roots(roots, res: float, endpoints=()):
    """Merge parameters closer than ``res``; fail on pairs closer than ``2 res``.

    Roots within ``res`` of a listed endpoint snap onto it.
    """
    roots = sorted(roots)
    groups = []
    for r in roots:
        if groups and r - groups[-1][-1] <= res:
            groups[-1].append(r)
        else:
            groups.append([r])
    merged = []
    for grp in groups:
        snap = [e for e in endpoints if any(abs(r - e) <= res for r in grp)]
        merged.append(snap[0] if snap else float(np.mean(grp)))
    for x, y in zip(merged, merged[1:]):
        if y - x < 2 * res:
            raise NumericalFailure(f"crossings at {x!r} and {y!r} are closer than 2*lambda_res", lam=x)
    return merged


def locate_crossings(path: OperatorPath, opts: Options | None = None):
    """Parameters in ``[0, 1]`` where ``path`` is singular, sorted.

    Returns a list of ``(lambda, kernel_frame)``.
    """
    o = resolve(opts)
    cache: dict[float, tuple] = {}

    def data(lam):
        lam = float(lam)
        hit = cache.get(lam)
        if hit is None:
            A = path.at(lam)
            vals = sym_eigvals(A)
            hit = (A, vals, float(np.min(np.abs(vals))), scale_of(vals))
            cache[lam] = hit
        return hit

    dnorm: dict[float, float] = {}

    def deriv_norm(lam):
        if path.deriv is None:
            return 0.0
        if lam not in dnorm:
            dnorm[lam] = float(np.linalg.norm(path.deriv_at(lam)))
        return dnorm[lam]

    def g(lam):
        return data(lam)[2]

    def speed(a, b):
        secant = np.linalg.norm(data(b)[0] - data(a)[0]) / (b - a)
        return max(deriv_norm(a), deriv_norm(b), secant)

    def is_zero(lam):
        _, _, gmin, sc = data(lam)
        return gmin <= o.tol_rank * sc

    roots = []
    endpoints = []
    for e in (0.0, 1.0):
        if is_zero(e):
            roots.append(e)
            endpoints.append(e)
    for lo, hi in scan_cells(g, speed, o, is_zero):
        found = []
        vlo, vhi = data(lo)[1], data(hi)[1]
        for k in range(path.dim):
            if vlo[k] * vhi[k] < 0.0:
                branch = lambda lam, k=k: data(lam)[1][k]
                found.append(brentq(branch, lo, hi, xtol=1e-16, rtol=1e-15, maxiter=200))
        x, gx = golden_min(g, lo, hi)
        if is_zero(x) and all(abs(x - r) > o.lambda_res for r in found):
            found.append(x)
        roots.extend(found)
    merged = merge_roots(roots, o.lambda_res, endpoints)
    out = []
    for lam in merged:
        K = kernel_basis(path.at(lam), o.tol_rank)
        if K.shape[1] == 0:
            raise NumericalFailure(f"located crossing at {lam!r} has no numerical kernel", lam=lam)
        out.append((lam, K))
    return out, {"evaluations": len(cache)}


def _role(lam: float) -> str:
    if lam == 0.0:
        return "start"
    if lam == 1.0:
        return "end"
    return "interior"


def crossing_record(path: OperatorPath, lam: float, kernel: Matrix, o: Options) -> CrossingRecord:
    form = as_sym(kernel.T @ path.deriv_at(lam) @ kernel)
    index = quadform_index(form, o.tol_rank)
    return CrossingRecord(lam, kernel, form, index, not index.degenerate, _role(lam))


def sfl_crossings(path: OperatorPath, opts: Options | None = None) -> SflReport:
    """Spectral flow as the signed count of (regular) crossing forms."""
    o = resolve(opts)
    if path.deriv is None:
        raise InvalidInput("sfl_crossings needs a path with a derivative")
    try:
        return _crossings(path, o)
    except DegenerateCrossing:
        if not o.retry_degenerate:
            raise
    eps = 1e-6 * scale_of(sym_eigvals(path.at(0.5)))
    n = path.dim
    bumped = OperatorPath(
        n,
        lambda lam: path.eval(lam) + eps * (lam - 0.5) * np.eye(n),
        lambda lam: path.deriv(lam) + eps * np.eye(n),
        path.smoothness_hint,
    )
    report = _crossings(bumped, o)
    report.diagnostics["perturbed"] = eps
    return report


def _crossings(path: OperatorPath, o: Options) -> SflReport:
    try:
        located, diag = locate_crossings(path, o)
    except ContinuumOfCrossings as exc:
        lam = exc.lam
        rec = crossing_record(path, lam, kernel_basis(path.at(lam), o.tol_rank), o)
        raise DegenerateCrossing(f"crossings are not isolated near lambda={lam!r}", rec) from exc
    records = []
    for lam, K in located:
        rec = crossing_record(path, lam, K, o)
        if not rec.regular:
            raise DegenerateCrossing(f"degenerate crossing form at lambda={lam!r}", rec)
        records.append(rec)
    value = sum(r.contribution for r in records)
    diag["n_crossings"] = len(records)
    return SflReport(value, "crossings", crossings=records, diagnostics=diag)


def spectral_flow(path: OperatorPath, method: str = "partition", opts: Options | None = None) -> int:
    if method == "partition":
        return sfl_partition(path, opts).value
    if method == "crossings":
        return sfl_crossings(path, opts).value
    raise InvalidInput(f"unknown method {method!r}")


def eigen_trajectory(path: OperatorPath, samples: int = 201):
    """Rows ``(lambda, eig_1, ..., eig_dim)`` on a uniform grid, for plotting."""
    lams = np.linspace(0.0, 1.0, samples)
    return [[float(l), *map(float, sym_eigvals(path.at(l)))] for l in lams]
