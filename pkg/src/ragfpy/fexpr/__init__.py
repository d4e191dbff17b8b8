"""Feature-formula language: parse, check, classify, evaluate and render."""
from .checker import OperationKind, ValueType, classify, validate
from .evaluator import evaluate
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
    depth,
    free_columns,
    render,
)
from .parser import MAX_DEPTH, parse
