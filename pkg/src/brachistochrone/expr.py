"""Tiny arithmetic expression compiler for profile keywords.

Grammar: numbers, the variable ``u``, constants ``pi`` and ``e``, the binary
operators ``+ - * / ^``, unary minus and the functions ``cos sin cosh sinh
exp``.  Expressions are parsed with :mod:`ast` and checked against a
whitelist before being turned into a closure; nothing is ``eval``'d.
"""

from __future__ import annotations

import ast
import math
import operator
from typing import Callable

_FUNCS = {
    "cos": math.cos,
    "sin": math.sin,
    "cosh": math.cosh,
    "sinh": math.sinh,
    "exp": math.exp,
}
_CONSTS = {"pi": math.pi, "e": math.e}
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


def _build(node: ast.AST, var: str) -> Callable[[float], float]:
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        value = float(node.value)
        return lambda x: value
    if isinstance(node, ast.Name):
        if node.id == var:
            return lambda x: x
        if node.id in _CONSTS:
            value = _CONSTS[node.id]
            return lambda x: value
        raise ExpressionError(f"unknown name {node.id!r}")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        left, right = _build(node.left, var), _build(node.right, var)
        return lambda x: op(left(x), right(x))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
        op = _UNOPS[type(node.op)]
        inner = _build(node.operand, var)
        return lambda x: op(inner(x))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        if node.func.id not in _FUNCS or len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"unsupported call {ast.unparse(node)!r}")
        fn = _FUNCS[node.func.id]
        arg = _build(node.args[0], var)
        return lambda x: fn(arg(x))
    raise ExpressionError(f"unsupported syntax {ast.unparse(node)!r}")


def compile_expression(text: str, var: str = "u") -> Callable[[float], float]:
    """Compile ``text`` into a one-argument float function of ``var``.

    >>> f = compile_expression("2*u^2 + cos(0)")
    >>> f(3.0)
    19.0
    """
    source = text.strip().replace("^", "**")
    if not source:
        raise ExpressionError("empty expression")
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    fn = _build(tree.body, var)

    def evaluate(x: float) -> float:
        return float(fn(float(x)))

    return evaluate
