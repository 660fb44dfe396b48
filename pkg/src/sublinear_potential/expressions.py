"""Restricted arithmetic expressions over node coordinates.

Config files describe densities and boundary data as strings such as
``"1 - 0.5 * sqrt(1 + (1 - r**2) / 4)"``.  They are parsed with :mod:`ast`
and only numbers, the node variables, arithmetic operators and a fixed set of
numpy functions are accepted; nothing is ever passed to ``eval``.
"""

from __future__ import annotations

import ast
import operator

import numpy as np

VARIABLES = ("x", "y", "z", "r", "delta")

FUNCTIONS = {
    "sqrt": np.sqrt,
    "exp": np.exp,
    "log": np.log,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "abs": np.abs,
    "min": np.minimum,
    "max": np.maximum,
}

CONSTANTS = {"pi": np.pi, "e": np.e}

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}


class ExpressionError(ValueError):
    pass


def _check(node):
    if isinstance(node, ast.Expression):
        return _check(node.body)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExpressionError(f"only numeric literals are allowed, got {node.value!r}")
        return
    if isinstance(node, ast.Name):
        if node.id not in VARIABLES and node.id not in CONSTANTS:
            raise ExpressionError(f"unknown name {node.id!r}")
        return
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        _check(node.left)
        _check(node.right)
        return
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
        _check(node.operand)
        return
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in FUNCTIONS:
        if node.keywords:
            raise ExpressionError("keyword arguments are not allowed")
        for a in node.args:
            _check(a)
        return
    raise ExpressionError(f"unsupported syntax: {ast.dump(node)[:60]}")


def compile_expression(text: str) -> ast.Expression:
    """Parse and validate; raises :class:`ExpressionError`."""
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from exc
    _check(tree)
    return tree


def _eval(node, env):
    if isinstance(node, ast.Expression):
        return _eval(node.body, env)
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        return env[node.id] if node.id in env else CONSTANTS[node.id]
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.UnaryOp):
        return _UNOPS[type(node.op)](_eval(node.operand, env))
    return FUNCTIONS[node.func.id](*(_eval(a, env) for a in node.args))


def evaluate(text: str, points, delta=None) -> np.ndarray:
    """Evaluate ``text`` at each row of ``points`` (shape ``(n, d)``).

    ``x, y, z`` are coordinates (missing ones are zero), ``r`` the Euclidean
    norm and ``delta`` the supplied boundary distance (zero if omitted).
    """
    tree = compile_expression(text)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = pts.shape
    env = {name: (pts[:, k] if k < d else np.zeros(n)) for k, name in enumerate(("x", "y", "z"))}
    env["r"] = np.linalg.norm(pts, axis=1)
    env["delta"] = np.zeros(n) if delta is None else np.asarray(delta, dtype=float)
    with np.errstate(all="ignore"):
        out = np.broadcast_to(np.asarray(_eval(tree, env), dtype=float), (n,)).copy()
    if not np.all(np.isfinite(out)):
        raise ExpressionError(f"{text!r} is not finite at every node")
    return out
