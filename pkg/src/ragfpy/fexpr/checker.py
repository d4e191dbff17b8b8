"""Type checking and operation-kind classification for formulas."""
import enum
from typing import Iterable, Union

from ..errors import FormulaTypeError, UnknownFormulaColumn
from .nodes import (
    FUNCTIONS,
    BoolOp,
    Binary,
    Call,
    Column,
    Compare,
    Conditional,
    FeatureExpr,
    Node,
    Number,
    Unary,
    free_columns,
    render,
)


class ValueType(enum.Enum):
    NUMERIC = "numeric"
    BOOLEAN = "boolean"


class OperationKind(enum.Enum):
    """How a generated feature relates to the columns it is built from.

    SCALING maps a single column, TRANSFORMATION fuses two or more columns
    into one numeric value, and JUDGMENT is a rule yielding 0 or 1.
    """

    SCALING = "Scaling"
    TRANSFORMATION = "Transformation"
    JUDGMENT = "Judgment"


def _names(schema) -> set:
    names = set()
    for item in schema:
        names.add(item if isinstance(item, str) else item.name)
    return names


def _type_of(node: Node, names: set) -> ValueType:
    if isinstance(node, Column):
        if node.name not in names:
            raise UnknownFormulaColumn(f"Formula references unknown column {node.name!r}.")
        return ValueType.NUMERIC
    if isinstance(node, Number):
        return ValueType.NUMERIC
    if isinstance(node, Unary):
        _expect(node.operand, names, ValueType.NUMERIC, f"operand of unary {node.op}")
        return ValueType.NUMERIC
    if isinstance(node, Binary):
        _expect(node.left, names, ValueType.NUMERIC, f"left operand of {node.op}")
        _expect(node.right, names, ValueType.NUMERIC, f"right operand of {node.op}")
        return ValueType.NUMERIC
    if isinstance(node, Call):
        lo, hi = FUNCTIONS[node.func]
        n = len(node.args)
        if n < lo or (hi is not None and n > hi):
            expected = str(lo) if lo == hi else f"at least {lo}"
            raise FormulaTypeError(f"{node.func}() takes {expected} argument(s), got {n}.")
        for arg in node.args:
            _expect(arg, names, ValueType.NUMERIC, f"argument of {node.func}()")
        return ValueType.NUMERIC
    if isinstance(node, Compare):
        _expect(node.left, names, ValueType.NUMERIC, f"left side of {node.op}")
        _expect(node.right, names, ValueType.NUMERIC, f"right side of {node.op}")
        return ValueType.BOOLEAN
    if isinstance(node, BoolOp):
        _expect(node.left, names, ValueType.BOOLEAN, f"left side of {node.op}")
        _expect(node.right, names, ValueType.BOOLEAN, f"right side of {node.op}")
        return ValueType.BOOLEAN
    if isinstance(node, Conditional):
        _expect(node.cond, names, ValueType.BOOLEAN, "condition of if")
        then = _type_of(node.then, names)
        _expect(node.orelse, names, then, "else branch (must match then branch)")
        return then
    raise TypeError(f"not a formula node: {node!r}")


def _expect(node, names, expected: ValueType, where: str):
    got = _type_of(node, names)
    if got is not expected:
        raise FormulaTypeError(
            f"{where} must be {expected.value}, got {got.value} in {render(node)!r}."
        )


def validate(e: Union[FeatureExpr, Node], schema: Iterable) -> ValueType:
    """Check a formula against a schema and return its result type.

    `schema` may hold :class:`~ragfpy.tabular.FeatureMeta` objects or plain
    column names. A formula must reference at least one column.

    Raises
    ------
    UnknownFormulaColumn
        a column reference is not in the schema
    FormulaTypeError
        arithmetic on a boolean, a boolean operator on numbers, a bad
        function arity, or a formula with no column reference
    """
    node = e.ast if isinstance(e, FeatureExpr) else e
    result = _type_of(node, _names(schema))
    if not free_columns(node):
        raise FormulaTypeError(f"Formula {render(node)!r} references no column.")
    return result


def classify(e: Union[FeatureExpr, Node], schema: Iterable) -> OperationKind:
    result = validate(e, schema)
    if result is ValueType.BOOLEAN:
        return OperationKind.JUDGMENT
    if len(free_columns(e)) == 1:
        return OperationKind.SCALING
    return OperationKind.TRANSFORMATION
