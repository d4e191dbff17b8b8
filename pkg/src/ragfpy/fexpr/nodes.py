"""AST node types for feature formulas, plus canonical rendering."""
import math, re
from dataclasses import dataclass
from typing import FrozenSet, Iterator, Tuple, Union

FUNCTIONS = {
    # name: (min args, max args)
    "log": (1, 1),
    "exp": (1, 1),
    "sqrt": (1, 1),
    "abs": (1, 1),
    "min": (2, None),
    "max": (2, None),
}
KEYWORDS = {"and", "or", "if", "then", "else"}
ARITHMETIC_OPS = ("+", "-", "*", "/")
COMPARISON_OPS = ("<", "<=", ">", ">=", "==", "!=")
BOOLEAN_OPS = ("and", "or")

_IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class Column:
    name: str


@dataclass(frozen=True)
class Number:
    value: float


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Node"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    args: Tuple["Node", ...]


@dataclass(frozen=True)
class Compare:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class BoolOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Conditional:
    cond: "Node"
    then: "Node"
    orelse: "Node"


Node = Union[Column, Number, Unary, Binary, Call, Compare, BoolOp, Conditional]


@dataclass(frozen=True)
class FeatureExpr:
    """A parsed formula.

    Equality is structural on the AST; `source_text` is what was parsed.
    """

    ast: Node
    source_text: str = ""

    def __eq__(self, other):
        if not isinstance(other, FeatureExpr):
            return NotImplemented
        return self.ast == other.ast

    def __hash__(self):
        return hash(self.ast)

    def __str__(self):
        return render(self)


def children(node: Node) -> Tuple[Node, ...]:
    if isinstance(node, (Column, Number)):
        return ()
    if isinstance(node, Unary):
        return (node.operand,)
    if isinstance(node, Call):
        return node.args
    if isinstance(node, Conditional):
        return (node.cond, node.then, node.orelse)
    return (node.left, node.right)


def walk(node: Node) -> Iterator[Node]:
    """pre-order traversal, iterative so long operator chains are fine"""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children(n)))


def depth(node: Node) -> int:
    best = 0
    stack = [(node, 1)]
    while stack:
        n, d = stack.pop()
        best = max(best, d)
        stack.extend((c, d + 1) for c in children(n))
    return best


def free_columns(e) -> FrozenSet[str]:
    """Distinct column names referenced by a formula (or a bare node)."""
    node = e.ast if isinstance(e, FeatureExpr) else e
    return frozenset(n.name for n in walk(node) if isinstance(n, Column))


def render_column(name: str) -> str:
    if _IDENTIFIER.match(name) and name not in KEYWORDS and name not in FUNCTIONS:
        return name
    if "`" in name:
        raise ValueError(f"Column name {name!r} contains a backtick and cannot be rendered.")
    return f"`{name}`"


def render_number(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError(f"Number {value!r} has no formula literal.")
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _atomic(node: Node) -> bool:
    return isinstance(node, (Column, Number, Call, Unary))


def _operand(node: Node) -> str:
    text = _render(node)
    return text if _atomic(node) else f"({text})"


def _render(node: Node) -> str:
    if isinstance(node, Column):
        return render_column(node.name)
    if isinstance(node, Number):
        return render_number(node.value)
    if isinstance(node, Unary):
        return f"{node.op}{_operand(node.operand)}"
    if isinstance(node, Call):
        return f"{node.func}({', '.join(_render(a) for a in node.args)})"
    if isinstance(node, Conditional):
        return (
            f"if {_operand(node.cond)} then {_operand(node.then)} "
            f"else {_operand(node.orelse)}"
        )
    return f"{_operand(node.left)} {node.op} {_operand(node.right)}"


def render(e) -> str:
    """Canonical text for a formula.

    Every composite operand is parenthesised, so precedence is explicit:
    ``a+b*c`` renders as ``a + (b * c)``. Column names that are not plain
    identifiers (or clash with keywords/functions) are back-quoted.
    """
    node = e.ast if isinstance(e, FeatureExpr) else e
    return _render(node)
