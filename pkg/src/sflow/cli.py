"""Command-line entry point.

Exit codes: 0 success, 1 verification failure, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import reports
from .config import Options
from .errors import InvalidInput, NumericalFailure
from .exprs import MatrixExpr
from .gapmetric import gap_delta, gap_distance, perturbation_inequality_check
from .hamiltonian import (
    HamiltonianFamily,
    Perturbation,
    comparison_check,
    hamiltonian_sfl,
    isolated_bound_check,
    sweep_nontrivial,
)
from .maslov import LagrangianPath, angle_trajectory, lagrangian_frame, maslov_index, maslov_pair_index
from .specflow import OperatorPath, eigen_trajectory, sfl_crossings, sfl_partition
from .suite import CHECKS, RunConfig, run_axiom_suite

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="64-bit unsigned seed")
    common.add_argument("--dim", type=int, default=None, help="largest matrix dimension (axioms)")
    common.add_argument("--samples", action="append", default=[], metavar="N|SUITE=N",
                        help="instance count for every suite, or for one suite; repeatable")
    common.add_argument("--grid", type=int, default=None, help="time steps for Hamiltonian problems")
    common.add_argument("--tol-rank", type=float, default=None)
    common.add_argument("--tol-orth", type=float, default=None)
    common.add_argument("--lambda-res", type=float, default=None)
    common.add_argument("--out", type=Path, default=None, help="directory for the JSON report (default: stdout)")
    common.add_argument("--emit-csv", action="store_true", help="also write eigenvalue/angle trajectories")

    parser = _Parser(prog="sflow", description="Spectral flow, gap metric and Maslov index toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sfl", parents=[common], help="spectral flow of a matrix path spec")
    p.add_argument("spec", type=Path)
    p.add_argument("--method", choices=("partition", "crossings", "both"), default="both")

    p = sub.add_parser("gap", parents=[common], help="gap distances and the perturbation inequality")
    p.add_argument("spec", type=Path)

    p = sub.add_parser("maslov", parents=[common], help="Maslov index of a Lagrangian path (or pair)")
    p.add_argument("spec", type=Path)

    p = sub.add_parser("hamiltonian", parents=[common], help="Hamiltonian boundary-value family")
    p.add_argument("spec", type=Path)
    p.add_argument("--mode", choices=("sweep", "sfl", "bound", "comparison"), default=None,
                   help="overrides the spec's mode (default sweep)")

    sub.add_parser("axioms", parents=[common], help="run the randomized property suite")
    return parser


def _options(args) -> Options:
    changes = {}
    for key in ("tol_rank", "tol_orth", "lambda_res", "grid"):
        value = getattr(args, key)
        if value is not None:
            changes[key] = value
    return Options().with_(**changes)


def _load(path: Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise InvalidInput(f"spec file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: invalid JSON ({exc.msg})") from None
    if not isinstance(data, dict):
        raise InvalidInput("spec must be a JSON object")
    return data


def _field(spec: dict, key: str):
    if key not in spec:
        raise InvalidInput(f"spec is missing {key!r}")
    return spec[key]


def _numeric(rows, name: str) -> np.ndarray:
    try:
        M = np.array(rows, dtype=float)
    except (TypeError, ValueError):
        raise InvalidInput(f"{name} must be a numeric matrix") from None
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2:
        raise InvalidInput(f"{name} must be a matrix")
    return M


def operator_path_from_spec(spec: dict) -> OperatorPath:
    M = MatrixExpr(_field(spec, "matrix"), ("lam",))
    if "dim" in spec and spec["dim"] != M.shape[0]:
        raise InvalidInput(f"dim {spec['dim']} does not match the matrix size {M.shape[0]}")
    if not M.is_symmetric():
        raise InvalidInput("path matrix is not symmetric")
    dM = M.derivative("lam")
    return OperatorPath(M.shape[0], lambda lam: M(lam), lambda lam: dM(lam), int(spec.get("smoothness_hint", 64)))


def lagrangian_path_from_spec(rows, n: int, name: str) -> LagrangianPath:
    F = MatrixExpr(rows, ("lam",))
    if F.shape != (2 * n, n):
        raise InvalidInput(f"{name} must be {2 * n}x{n}, got {F.shape[0]}x{F.shape[1]}")
    constant = all(not e.free_symbols for r in F.exprs for e in r)
    return LagrangianPath(n, lambda lam: F(lam), meta={"constant": constant})


def family_from_spec(spec: dict, opts: Options) -> HamiltonianFamily:
    n = int(_field(spec, "n"))
    S = MatrixExpr(_field(spec, "S"), ("lam", "t"))
    if S.shape != (2 * n, 2 * n) or not S.is_symmetric():
        raise InvalidInput(f"S must be a symmetric {2 * n}x{2 * n} matrix")
    dS = S.derivative("lam")
    bc1 = lagrangian_path_from_spec(_field(spec, "bc1"), n, "bc1")
    bc2 = lagrangian_path_from_spec(_field(spec, "bc2"), n, "bc2")
    grid = int(spec.get("grid", opts.grid))
    return HamiltonianFamily(n, S, bc1, bc2, dS, grid, vectorized=True)


def _perturbation(rows, n: int, name: str) -> Perturbation:
    K = MatrixExpr(rows, ("lam", "t"))
    if K.shape != (2 * n, 2 * n) or not K.is_symmetric():
        raise InvalidInput(f"{name} must be a symmetric {2 * n}x{2 * n} matrix")
    return Perturbation(K, K.derivative("lam"))


def _emit(args, report: dict) -> None:
    text = reports.dumps(report)
    if args.out is None:
        sys.stdout.write(text)
    else:
        reports.write_json(args.out / f"{args.command}.json", report)


def _emit_csv(args, rows, prefix: str) -> None:
    if args.emit_csv:
        out = args.out if args.out is not None else Path(".")
        reports.write_csv(out / f"{args.command}_trajectory.csv", rows, prefix)


def cmd_sfl(args, opts) -> int:
    spec = _load(args.spec)
    path = operator_path_from_spec(spec)
    result, crossings, certificates = {}, [], {}
    if args.method in ("partition", "both"):
        rep = sfl_partition(path, opts)
        result["partition"] = rep.value
        certificates["segments"] = [s.as_dict() for s in rep.segments]
    if args.method in ("crossings", "both"):
        rep = sfl_crossings(path, opts)
        result["crossings"] = rep.value
        crossings = rep.crossings
    values = set(result.values())
    result["value"] = values.pop() if len(values) == 1 else None
    result["agree"] = result["value"] is not None
    _emit(args, reports.envelope("sfl", args.seed, {"options": opts.as_dict(), "spec": spec, "method": args.method},
                                 result, certificates, crossings))
    _emit_csv(args, eigen_trajectory(path), "eig")
    return EXIT_OK if result["agree"] else EXIT_FAIL


def cmd_gap(args, opts) -> int:
    spec = _load(args.spec)
    T, S = _numeric(_field(spec, "T"), "T"), _numeric(_field(spec, "S"), "S")
    A = _numeric(spec.get("A", np.zeros_like(T)), "A")
    B = _numeric(spec.get("B", np.zeros_like(S)), "B")
    d = gap_distance(T, S)
    dts, dst = gap_delta(T, S), gap_delta(S, T)
    chk = perturbation_inequality_check(T, S, A, B)
    identity_err = abs(d - max(dts, dst))
    result = {"gap": d, "delta_TS": dts, "delta_ST": dst, "identity_error": identity_err,
              "inequality": chk.as_dict(), "ratio": chk.ratio}
    ok = chk.holds and identity_err <= 1e-10
    _emit(args, reports.envelope("gap", args.seed, {"options": opts.as_dict(), "spec": spec}, result,
                                 {"identity_holds": identity_err <= 1e-10, "inequality_holds": chk.holds}))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_maslov(args, opts) -> int:
    spec = _load(args.spec)
    n = int(_field(spec, "n"))
    if "frame2" in spec:
        p1 = lagrangian_path_from_spec(_field(spec, "frame1"), n, "frame1")
        p2 = lagrangian_path_from_spec(spec["frame2"], n, "frame2")
        rep = maslov_pair_index(p1, p2, opts)
        traj_path, ref = p1, None
    else:
        path = lagrangian_path_from_spec(_field(spec, "frame"), n, "frame")
        ref = _numeric(_field(spec, "reference"), "reference")
        if ref.shape != (2 * n, n):
            raise InvalidInput(f"reference must be {2 * n}x{n}")
        rep = maslov_index(path, lagrangian_frame(ref), opts)
        traj_path = path
    result = {"value": rep.value, "diagnostics": rep.diagnostics}
    _emit(args, reports.envelope("maslov", args.seed, {"options": opts.as_dict(), "spec": spec}, result,
                                 {"regular": all(c.regular for c in rep.crossings)}, rep.crossings))
    if ref is not None:
        _emit_csv(args, angle_trajectory(traj_path, ref), "angle")
    return EXIT_OK


def cmd_hamiltonian(args, opts) -> int:
    spec = _load(args.spec)
    mode = args.mode or spec.get("mode", "sweep")
    fam = family_from_spec(spec, opts)
    config = {"options": opts.as_dict(), "spec": spec, "mode": mode}
    status = EXIT_OK
    crossings, certificates = [], {}
    if mode == "sweep":
        rep = sweep_nontrivial(fam, opts)
        result = rep.as_dict()
        crossings = [{"lambda": s.lam, "kernel_dim": s.kernel_dim} for s in rep.solutions]
        if rep.hypothesis is not None and not rep.bound_satisfied:
            status = EXIT_FAIL
        certificates = {"bound_satisfied": rep.bound_satisfied, "drift": rep.diagnostics["drift"]}
    elif mode == "sfl":
        rep = hamiltonian_sfl(fam, opts)
        result = {"value": rep.value}
        crossings = rep.crossings
        certificates = {"drift": rep.diagnostics["drift"]}
    elif mode == "bound":
        rec = isolated_bound_check(fam, spec.get("lambda_star"), opts)
        result = rec.as_dict()
        status = EXIT_OK if rec.holds else EXIT_FAIL
    elif mode == "comparison":
        K = _perturbation(_field(spec, "K"), fam.n, "K")
        Kp = _perturbation(_field(spec, "Kprime"), fam.n, "Kprime")
        rec = comparison_check(fam, K, Kp, opts)
        result = rec.as_dict()
        status = EXIT_OK if rec.holds else EXIT_FAIL
    else:
        raise InvalidInput(f"unknown mode {mode!r}")
    _emit(args, reports.envelope("hamiltonian", args.seed, config, result, certificates, crossings))
    return status


def _samples(items) -> dict:
    out = {}
    for item in items:
        if "=" in item:
            name, _, count = item.partition("=")
            if name not in CHECKS:
                raise InvalidInput(f"unknown suite {name!r}")
            out[name] = int(count)
        else:
            n = int(item)
            out.update({name: n for name in CHECKS if name != "hamiltonian-rotation"})
    return out


def cmd_axioms(args, opts) -> int:
    tolerances = {k: getattr(args, k) for k in ("tol_rank", "tol_orth", "lambda_res") if getattr(args, k) is not None}
    try:
        cfg = RunConfig(
            seed=args.seed,
            dims=tuple(range(1, (args.dim or 10) + 1)),
            samples=_samples(args.samples),
            tolerances=tolerances,
            grid=args.grid or 400,
            output_dir=None if args.out is None else str(args.out),
        )
    except ValueError as exc:
        raise InvalidInput(str(exc)) from None
    rep = run_axiom_suite(cfg)
    _emit(args, reports.envelope("axioms", args.seed, cfg.as_dict(), rep.as_dict(), {"verdict": rep.verdict}))
    for child in rep.children:
        print(f"{child.name:24s} {child.instances:5d}  {child.verdict}", file=sys.stderr)
    return EXIT_OK if rep.verdict == "pass" else EXIT_FAIL


COMMANDS = {"sfl": cmd_sfl, "gap": cmd_gap, "maslov": cmd_maslov, "hamiltonian": cmd_hamiltonian,
            "axioms": cmd_axioms}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors exit 2, --help exits 0
        return int(exc.code or 0)
    try:
        if args.seed < 0 or args.seed >= 2 ** 64:
            raise InvalidInput("--seed must be a 64-bit unsigned integer")
        opts = _options(args)
        return COMMANDS[args.command](args, opts)
    except (InvalidInput, ValueError) as exc:
        print(f"sflow: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalFailure as exc:
        print(f"sflow: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
