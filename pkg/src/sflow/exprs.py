"""Closed-form matrix entries for JSON spec files.

Entries are strings (or numbers) in the variables ``lam``, ``t`` and ``s``
using ``+ - * / **``, parentheses, numeric literals, ``pi`` and the functions
listed in :data:`FUNCTIONS`.  Only those AST nodes are accepted; the parsed
tree is rebuilt as a sympy expression so derivatives are exact.
"""

from __future__ import annotations

import ast
from typing import Sequence

import numpy as np
import sympy as sp

from .errors import InvalidInput

VARIABLES = ("lam", "t", "s")
FUNCTIONS = {
    "sin": sp.sin, "cos": sp.cos, "tan": sp.tan, "exp": sp.exp, "sqrt": sp.sqrt,
    "log": sp.log, "sinh": sp.sinh, "cosh": sp.cosh, "tanh": sp.tanh, "atan": sp.atan,
}
_SYMBOLS = {name: sp.Symbol(name, real=True) for name in VARIABLES}
_BINOPS = {ast.Add: sp.Add, ast.Sub: lambda a, b: a - b, ast.Mult: sp.Mul,
           ast.Div: lambda a, b: a / b, ast.Pow: sp.Pow}


def _build(node):
    if isinstance(node, ast.Expression):
        return _build(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return sp.nsimplify(node.value) if isinstance(node.value, int) else sp.Float(node.value, 17)
    if isinstance(node, ast.Name):
        if node.id in _SYMBOLS:
            return _SYMBOLS[node.id]
        if node.id == "pi":
            return sp.pi
        raise InvalidInput(f"unknown name {node.id!r}")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_build(node.left), _build(node.right))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _build(node.operand)
        return -inner if isinstance(node.op, ast.USub) else inner
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in FUNCTIONS:
        if len(node.args) != 1 or node.keywords:
            raise InvalidInput(f"{node.func.id} takes exactly one argument")
        return FUNCTIONS[node.func.id](_build(node.args[0]))
    raise InvalidInput(f"unsupported syntax: {ast.dump(node)[:60]}")


def parse(entry) -> sp.Expr:
    """Parse one entry (string, int or float) into a sympy expression."""
    if isinstance(entry, bool):
        raise InvalidInput("booleans are not matrix entries")
    if isinstance(entry, (int, float)):
        return sp.Float(entry, 17) if isinstance(entry, float) else sp.Integer(entry)
    if not isinstance(entry, str):
        raise InvalidInput(f"matrix entries must be strings or numbers, got {type(entry).__name__}")
    try:
        tree = ast.parse(entry.strip(), mode="eval")
    except SyntaxError as exc:
        raise InvalidInput(f"cannot parse {entry!r}: {exc.msg}") from None
    return _build(tree)


class MatrixExpr:
    """A matrix of parsed entries, callable on scalars or 1-d arrays of ``lam``."""

    def __init__(self, rows: Sequence[Sequence], variables: Sequence[str] = ("lam",)):
        if not rows or not all(isinstance(r, (list, tuple)) for r in rows):
            raise InvalidInput("a matrix must be a non-empty list of rows")
        width = len(rows[0])
        if width == 0 or any(len(r) != width for r in rows):
            raise InvalidInput("matrix rows have unequal lengths")
        for v in variables:
            if v not in _SYMBOLS:
                raise InvalidInput(f"unknown variable {v!r}")
        self.variables = tuple(variables)
        self.exprs = [[parse(e) for e in r] for r in rows]
        allowed = {_SYMBOLS[v] for v in self.variables}
        for r in self.exprs:
            for e in r:
                extra = e.free_symbols - allowed
                if extra:
                    raise InvalidInput(f"entry uses {sorted(map(str, extra))}, allowed: {list(self.variables)}")
        self.shape = (len(rows), width)
        self._fns = self._lambdify(self.exprs)

    def _lambdify(self, exprs):
        syms = [_SYMBOLS[v] for v in self.variables]
        return [[sp.lambdify(syms, e, modules="numpy") for e in r] for r in exprs]

    def is_symmetric(self) -> bool:
        r, c = self.shape
        return r == c and all(sp.simplify(self.exprs[i][j] - self.exprs[j][i]) == 0
                              for i in range(r) for j in range(i + 1, c))

    def derivative(self, var: str = "lam") -> "MatrixExpr":
        out = MatrixExpr.__new__(MatrixExpr)
        out.variables = self.variables
        out.exprs = [[sp.diff(e, _SYMBOLS[var]) for e in r] for r in self.exprs]
        out.shape = self.shape
        out._fns = out._lambdify(out.exprs)
        return out

    def __call__(self, *args) -> np.ndarray:
        vals = [np.asarray(f(*args), dtype=float) for r in self._fns for f in r]
        vals = np.broadcast_arrays(*vals)
        out = np.stack(vals, axis=-1)
        return out.reshape(out.shape[:-1] + self.shape)

    def to_json(self) -> list:
        return [[str(e) for e in r] for r in self.exprs]
