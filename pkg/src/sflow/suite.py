"""Randomized property suite.

Each sub-suite is a function ``check(ctx, index) -> list[failure]`` run over
``index = 0 .. count-1``.  Instance ``index`` of sub-suite ``name`` draws its
randomness from ``default_rng([seed, SUITE_IDS[name], index])``, so any
failure can be replayed from ``(seed, suite, index)`` alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import Options
from .errors import SflowError
from .gapmetric import gap_delta, gap_distance, perturbation_inequality_check
from .generators import (
    HOMOTOPY_MODES,
    comparison_family,
    generate_homotopy,
    generate_operator_path,
    np_path,
    random_orthogonal,
    random_psd,
    random_symmetric,
    rotating_boundary_family,
    rotation_family,
    sign_hypothesis_family,
    single_crossing_path,
)
from .hamiltonian import comparison_check, fundamental_solution, hamiltonian_sfl, isolated_bound_check, sweep_nontrivial
from .maslov import sfl_via_maslov
from .specflow import (
    OperatorPath,
    add_paths,
    concatenate,
    normalization_path,
    restrict,
    reverse,
    riesz_path,
    sfl_crossings,
    sfl_partition,
)

SUITE_IDS = {
    "method-agreement": 1,
    "homotopy": 2,
    "axioms": 3,
    "gap": 4,
    "maslov": 5,
    "hamiltonian-rotation": 6,
    "comparison": 7,
    "comparison-hamiltonian": 8,
    "count-bound": 9,
    "riesz": 10,
    "isolated": 11,
}

DEFAULT_COUNTS = {
    "method-agreement": 200,
    "homotopy": 100,
    "axioms": 60,
    "gap": 1000,
    "maslov": 100,
    "hamiltonian-rotation": 1,
    "comparison": 200,
    "comparison-hamiltonian": 12,
    "count-bound": 12,
    "riesz": 100,
    "isolated": 100,
}

# largest matrix dimension used by each sub-suite
MAX_DIM = {"method-agreement": 10, "homotopy": 8, "axioms": 10, "gap": 8, "maslov": 6,
           "comparison": 10, "riesz": 10, "isolated": 10}


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    dims: tuple = tuple(range(1, 11))
    samples: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    grid: int = 400
    output_dir: str | None = None
    suites: tuple | None = None

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2 ** 64):
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not self.dims or min(self.dims) < 1:
            raise ValueError("dims must be positive")
        unknown = set(self.samples) - set(SUITE_IDS)
        if unknown:
            raise ValueError(f"unknown suites in samples: {sorted(unknown)}")
        bad = set(self.tolerances) - {"tol_rank", "tol_orth", "lambda_res"}
        if bad:
            raise ValueError(f"unknown tolerance overrides: {sorted(bad)}")

    def count(self, suite: str) -> int:
        return int(self.samples.get(suite, DEFAULT_COUNTS[suite]))

    def options(self) -> Options:
        return Options().with_(**self.tolerances, grid=self.grid)

    def rng(self, suite: str, index: int) -> np.random.Generator:
        return np.random.default_rng([int(self.seed), SUITE_IDS[suite], int(index)])

    def dim(self, rng, suite: str) -> int:
        choices = [d for d in self.dims if d <= MAX_DIM.get(suite, 10)] or [1]
        return int(rng.choice(choices))

    def as_dict(self) -> dict:
        return {"seed": int(self.seed), "dims": list(self.dims), "samples": dict(sorted(self.samples.items())),
                "tolerances": dict(sorted(self.tolerances.items())), "grid": self.grid,
                "suites": None if self.suites is None else list(self.suites)}


@dataclass
class SuiteReport:
    name: str
    instances: int
    failures: list
    summary: dict = field(default_factory=dict)
    children: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "pass" if not self.failures else "fail"

    @property
    def minimal_failure(self):
        if not self.failures:
            return None
        return min(self.failures, key=lambda f: (f.get("size", 0), f["suite"], f["index"]))

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "instances": self.instances,
            "verdict": self.verdict,
            "failures": self.failures,
            "minimal_failure": self.minimal_failure,
            "summary": self.summary,
            "children": [c.as_dict() for c in self.children],
        }


@dataclass
class Context:
    cfg: RunConfig
    opts: Options
    sfl: Callable[[OperatorPath], int]
    injected: bool = False
    stats: dict = field(default_factory=dict)

    def bump(self, key: str, value: float):
        self.stats[key] = max(self.stats.get(key, -math.inf), float(value))


def _fail(suite, index, prop, size=0, **data) -> dict:
    return {"suite": suite, "index": index, "property": prop, "size": size, **data}


# ---------------------------------------------------------------------------
# sub-suites


def check_method_agreement(ctx: Context, i: int) -> list:
    rng = ctx.cfg.rng("method-agreement", i)
    dim = ctx.cfg.dim(rng, "method-agreement")
    budget = int(rng.integers(0, 6))
    p = generate_operator_path(rng, dim, budget)
    a = ctx.sfl(p)
    b = sfl_crossings(p, ctx.opts).value
    if a != b:
        return [_fail("method-agreement", i, "partition == crossings", dim, dim=dim, budget=budget,
                      partition=a, crossings=b, expected=p.meta["expected_sfl"])]
    return []


def check_homotopy(ctx: Context, i: int) -> list:
    rng = ctx.cfg.rng("homotopy", i)
    dim = ctx.cfg.dim(rng, "homotopy")
    mode = HOMOTOPY_MODES[i % len(HOMOTOPY_MODES)]
    h = generate_homotopy(rng, dim, mode, int(rng.integers(0, 5)))
    v = {k: ctx.sfl(p) for k, p in h.edges().items()}
    out = []
    if v["bottom"] != v["left"] + v["top"] - v["right"]:
        out.append(_fail("homotopy", i, "homotopy formula", dim, mode=mode, edges=v))
    if mode != "general" and v["bottom"] != v["top"]:
        out.append(_fail("homotopy", i, f"{mode} invariance", dim, mode=mode, edges=v))
    return out


def check_axioms(ctx: Context, i: int) -> list:
    rng = ctx.cfg.rng("axioms", i)
    dim = ctx.cfg.dim(rng, "axioms")
    o, sfl = ctx.opts, ctx.sfl
    out = []

    def expect(prop, got, want, **extra):
        if got != want:
            out.append(_fail("axioms", i, prop, dim, dim=dim, got=got, want=want, **extra))

    p = generate_operator_path(rng, dim, int(rng.integers(0, 5)))
    whole = sfl(p)
    r = float(rng.uniform(0.1, 0.9))
    p1, p2 = restrict(p, 0.0, r), restrict(p, r, 1.0)
    s1, s2 = sfl(p1), sfl(p2)
    expect("(C) concatenation", sfl(concatenate(p1, p2, o.tol_orth)), s1 + s2, split=r)
    expect("(C) split", s1 + s2, whole, split=r)
    expect("reversal", sfl(reverse(p)), -whole)
    expect("(Z) invertible path", sfl(generate_operator_path(rng, dim, 0)), 0)
    kd = int(rng.integers(0, dim + 1))
    expect("constant kernel", sfl(generate_operator_path(rng, dim, 0, fixed_spectrum=True, kernel_dim=kd)), 0,
           kernel_dim=kd)

    kd = int(rng.integers(0, dim))
    Q = random_orthogonal(rng, dim)
    nonzero = rng.choice([-1.0, 1.0], size=dim - kd) * rng.uniform(0.5, 2.0, size=dim - kd)
    T = Q @ np.diag(np.concatenate([np.zeros(kd), nonzero])) @ Q.T
    expect("(N) normalization", sfl(normalization_path(T, tol_rank=o.tol_rank)), kd, kernel_dim=kd)
    expect("(N) half path", sfl(normalization_path(T, half=True, tol_rank=o.tol_rank)), 0, kernel_dim=kd)
    expect("(NP)", sfl(np_path(max(dim, 1), rng)), 1)

    loop = generate_homotopy(rng, dim, "free-loop").edges()["bottom"]
    K = generate_homotopy(rng, dim, "free-loop").edges()["bottom"]
    expect("loop perturbation", sfl(add_paths(loop, K)), sfl(loop))
    return out


def check_gap(ctx: Context, i: int) -> list:
    rng = ctx.cfg.rng("gap", i)
    dim = ctx.cfg.dim(rng, "gap")
    scale = float(rng.choice([0.1, 1.0, 10.0]))
    T, S, A, B = (random_symmetric(rng, dim, scale) for _ in range(4))
    out = []
    d = gap_distance(T, S)
    identity_err = abs(d - max(gap_delta(T, S), gap_delta(S, T)))
    ctx.bump("gap_identity_error", identity_err)
    if identity_err > 1e-10:
        out.append(_fail("gap", i, "gap = max one-sided gaps", dim, error=identity_err,
                         T=T, S=S))
    chk = perturbation_inequality_check(T, S, A, B, atol=1e-9)
    ctx.bump("gap_max_ratio", chk.ratio)
    if not chk.holds:
        out.append(_fail("gap", i, "perturbation inequality", dim, lhs=chk.lhs, rhs=chk.rhs,
                         T=T, S=S, A=A, B=B))
    if i < 100:
        t, s = rng.standard_normal(2) * float(rng.choice([0.1, 1.0, 10.0]))
        want = abs(math.sin(math.atan(t) - math.atan(s)))
        got = gap_distance([[t]], [[s]])
        ctx.bump("gap_scalar_error", abs(got - want))
        if abs(got - want) > 1e-12:
            out.append(_fail("gap", i, "scalar closed form", 1, t=t, s=s, got=got, want=want))
    return out


def check_maslov(ctx: Context, i: int) -> list:
    rng = ctx.cfg.rng("maslov", i)
    dim = ctx.cfg.dim(rng, "maslov")
    p = generate_operator_path(rng, dim, int(rng.integers(0, 5)))
    m = sfl_via_maslov(p, ctx.opts)
    a = ctx.sfl(p)
    c = sfl_crossings(p, ctx.opts).value
    if not (m == a == c):
        return [_fail("maslov", i, "sfl == Maslov index of graphs", dim, maslov=m, partition=a, crossings=c)]
    return []


ROTATION_CROSSINGS = (0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0)


def check_rotation(ctx: Context, i: int) -> list:
    fam = rotation_family(grid=1000)
    o = ctx.opts.with_(grid=1000)
    rep = hamiltonian_sfl(fam, o)
    lams = sorted(c.lambda_star for c in rep.crossings)
    drift = max(fundamental_solution(fam, lam, o).symplectic_drift for lam in (0.0, 0.5, 1.0))
    ctx.bump("rotation_drift", drift)
    out = []
    if rep.value != 3:
        out.append(_fail("hamiltonian-rotation", i, "sfl == 3", 1, got=rep.value))
    if len(lams) != 4:
        out.append(_fail("hamiltonian-rotation", i, "four crossings", 1, crossings=lams))
    else:
        resid = max(abs(a - b) for a, b in zip(lams, ROTATION_CROSSINGS))
        ctx.bump("rotation_localization", resid)
        if resid > 1e-6:
            out.append(_fail("hamiltonian-rotation", i, "crossing set", 1, crossings=lams))
    if drift > 1e-8:
        out.append(_fail("hamiltonian-rotation", i, "symplectic drift", 1, drift=drift))
    return out


def check_comparison(ctx: Context, i: int) -> list:
    rng = ctx.cfg.rng("comparison", i)
    dim = ctx.cfg.dim(rng, "comparison")
    A = generate_operator_path(rng, dim, int(rng.integers(0, 5)))
    K = generate_operator_path(rng, dim, int(rng.integers(0, 3)))
    P0, P1 = random_psd(rng, dim, scale=0.5), random_psd(rng, dim, scale=0.5)
    Kp = OperatorPath(dim, lambda lam: K.at(lam) + (1 - lam) * P0 - lam * P1,
                      lambda lam: K.deriv_at(lam) - P0 - P1)
    if ctx.injected:
        a, b = ctx.sfl(add_paths(A, K)), ctx.sfl(add_paths(A, Kp))
    else:
        rec = comparison_check(A, K, Kp, ctx.opts)
        a, b = rec.sfl_K, rec.sfl_Kprime
    if a < b:
        return [_fail("comparison", i, "sfl(A+K) >= sfl(A+K')", dim, sfl_K=a, sfl_Kprime=b)]
    return []


def check_comparison_hamiltonian(ctx: Context, i: int) -> list:
    rng = ctx.cfg.rng("comparison-hamiltonian", i)
    n = 1 + int(rng.integers(0, 2))
    base, K, Kp = comparison_family(rng, n, ctx.cfg.grid)
    rec = comparison_check(base, K, Kp, ctx.opts)
    if not rec.holds:
        return [_fail("comparison-hamiltonian", i, "sfl(A+K) >= sfl(A+K')", n, **rec.as_dict())]
    return []


def check_count_bound(ctx: Context, i: int) -> list:
    if i == 0:
        fam = rotating_boundary_family(grid=ctx.cfg.grid)
        rep = sweep_nontrivial(fam, ctx.opts)
        out = []
        if abs(rep.maslov_pair) != 3 or rep.count < 3:
            out.append(_fail("count-bound", i, "rotating boundary instance", 1, count=rep.count,
                             maslov_pair=rep.maslov_pair))
        return out
    rng = ctx.cfg.rng("count-bound", i)
    n = 1 + int(rng.integers(0, 2))
    fam = sign_hypothesis_family(rng, n, ctx.cfg.grid)
    rep = sweep_nontrivial(fam, ctx.opts)
    if rep.hypothesis is None:
        return [_fail("count-bound", i, "sign hypothesis", n)]
    if not rep.bound_satisfied:
        return [_fail("count-bound", i, "N >= ceil(|mu|/n)", n, count=rep.count, maslov_pair=rep.maslov_pair)]
    return []


def check_riesz(ctx: Context, i: int) -> list:
    rng = ctx.cfg.rng("riesz", i)
    dim = ctx.cfg.dim(rng, "riesz")
    p = generate_operator_path(rng, dim, int(rng.integers(0, 5)))
    a, b = ctx.sfl(p), ctx.sfl(riesz_path(p))
    if a != b:
        return [_fail("riesz", i, "Riesz invariance", dim, original=a, transformed=b)]
    return []


def check_isolated(ctx: Context, i: int) -> list:
    rng = ctx.cfg.rng("isolated", i)
    dim = ctx.cfg.dim(rng, "isolated")
    p = single_crossing_path(rng, dim)
    rec = isolated_bound_check(p, p.meta["lambda_star"], ctx.opts)
    sfl_abs = abs(ctx.sfl(p))
    if sfl_abs > rec.kernel_dim or rec.kernel_dim != p.meta["kernel_dim"]:
        return [_fail("isolated", i, "|sfl| <= dim ker", dim, sfl_abs=sfl_abs, kernel_dim=rec.kernel_dim)]
    return []


CHECKS = {
    "method-agreement": check_method_agreement,
    "homotopy": check_homotopy,
    "axioms": check_axioms,
    "gap": check_gap,
    "maslov": check_maslov,
    "hamiltonian-rotation": check_rotation,
    "comparison": check_comparison,
    "comparison-hamiltonian": check_comparison_hamiltonian,
    "count-bound": check_count_bound,
    "riesz": check_riesz,
    "isolated": check_isolated,
}


def _context(cfg: RunConfig, sfl_impl) -> Context:
    opts = cfg.options()
    if sfl_impl is None:
        return Context(cfg, opts, lambda path: sfl_partition(path, opts).value)
    return Context(cfg, opts, sfl_impl, injected=True)


def run_suite(name: str, cfg: RunConfig, sfl_impl=None, indices=None) -> SuiteReport:
    ctx = _context(cfg, sfl_impl)
    check = CHECKS[name]
    indices = range(cfg.count(name)) if indices is None else indices
    failures, n = [], 0
    for i in indices:
        n += 1
        try:
            failures.extend(check(ctx, i))
        except SflowError as exc:
            failures.append(_fail(name, i, "raised", 0, error=f"{type(exc).__name__}: {exc}"))
    return SuiteReport(name, n, failures, dict(sorted(ctx.stats.items())))


def run_axiom_suite(cfg: RunConfig | None = None, sfl_impl=None) -> SuiteReport:
    """Run every selected sub-suite; the verdict passes iff no sub-suite failed."""
    cfg = RunConfig() if cfg is None else cfg
    names = list(CHECKS) if cfg.suites is None else list(cfg.suites)
    unknown = set(names) - set(CHECKS)
    if unknown:
        raise ValueError(f"unknown suites: {sorted(unknown)}")
    children = [run_suite(name, cfg, sfl_impl) for name in names]
    failures = [f for c in children for f in c.failures]
    return SuiteReport("axioms", sum(c.instances for c in children), failures,
                       {c.name: c.verdict for c in children}, children)


def replay(failure: dict, cfg: RunConfig, sfl_impl=None) -> list:
    """Re-run the instance behind a failure record; returns its failures (empty if it now passes)."""
    return run_suite(failure["suite"], cfg, sfl_impl, indices=[failure["index"]]).failures
