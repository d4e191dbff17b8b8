import numpy as np

from ..errors import NonFiniteResult
from .checker import ValueType, validate
from .nodes import (
    BoolOp,
    Binary,
    Call,
    Column,
    Compare,
    Conditional,
    FeatureExpr,
    Number,
    Unary,
    render,
)

_UNARY_FUNCS = {
    "log": np.log,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "abs": np.abs,
}
_ARITH = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
}
_COMPARE = {
    "<": np.less,
    "<=": np.less_equal,
    ">": np.greater,
    ">=": np.greater_equal,
    "==": np.equal,
    "!=": np.not_equal,
}


class _Evaluator(object):
    """Evaluates a node over every row, with an `active` row mask.

    Only active rows must produce finite numbers; rows routed to the other
    branch of a conditional are allowed to be non-finite in this one.
    """

    def __init__(self, columns, n_rows, formula):
        self.columns = columns
        self.n_rows = n_rows
        self.formula = formula

    def check(self, values, active):
        bad = active & ~np.isfinite(values)
        if bad.any():
            raise NonFiniteResult(int(np.argmax(bad)), self.formula)
        return values

    def eval(self, node, active):
        if isinstance(node, Column):
            return np.asarray(self.columns[node.name], dtype=np.float64)
        if isinstance(node, Number):
            return np.full(self.n_rows, node.value)
        if isinstance(node, Unary):
            return self.check(np.negative(self.eval(node.operand, active)), active)
        if isinstance(node, Binary):
            left = self.eval(node.left, active)
            right = self.eval(node.right, active)
            return self.check(_ARITH[node.op](left, right), active)
        if isinstance(node, Call):
            args = [self.eval(a, active) for a in node.args]
            if node.func == "min":
                out = np.minimum.reduce(args)
            elif node.func == "max":
                out = np.maximum.reduce(args)
            else:
                out = _UNARY_FUNCS[node.func](args[0])
            return self.check(out, active)
        if isinstance(node, Compare):
            return _COMPARE[node.op](self.eval(node.left, active), self.eval(node.right, active))
        if isinstance(node, BoolOp):
            left = self.eval(node.left, active)
            right = self.eval(node.right, active)
            return np.logical_and(left, right) if node.op == "and" else np.logical_or(left, right)
        if isinstance(node, Conditional):
            cond = self.eval(node.cond, active)
            then = self.eval(node.then, active & cond)
            orelse = self.eval(node.orelse, active & ~cond)
            return np.where(cond, then, orelse)
        raise TypeError(f"not a formula node: {node!r}")


def evaluate(e: FeatureExpr, d) -> np.ndarray:
    """Evaluate a formula row-wise over dataset `d`.

    Parameters
    ----------
    e : FeatureExpr
        formula, validated against ``d.schema`` here
    d : Dataset
        the table whose columns the formula references

    Returns
    -------
    np.ndarray
        float vector of length ``d.n_rows``; judgment formulas give exactly
        0.0 or 1.0

    Raises
    ------
    NonFiniteResult
        some row produced NaN or +/-inf (division by zero, log of a
        non-positive number, overflow); ``row`` is the first such row
    """
    result_type = validate(e, d.schema)
    evaluator = _Evaluator(d.columns(), d.n_rows, render(e))
    with np.errstate(all="ignore"):
        out = evaluator.eval(e.ast, np.ones(d.n_rows, dtype=bool))
    if result_type is ValueType.BOOLEAN:
        return out.astype(np.float64)
    return np.array(out, dtype=np.float64)
