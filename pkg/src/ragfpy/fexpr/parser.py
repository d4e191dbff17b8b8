"""
Recursive-descent parser for feature formulas.

Grammar::

    expr        := or_expr
    or_expr     := and_expr {"or" and_expr}
    and_expr    := cmp {"and" cmp}
    cmp         := sum [("<"|"<="|">"|">="|"=="|"!=") sum]
    sum         := term {("+"|"-") term}
    term        := factor {("*"|"/") factor}
    factor      := number | column | "(" expr ")" | func "(" expr {"," expr} ")"
                 | "-" factor | "if" expr "then" expr "else" expr
    column      := identifier | "`" any-chars-except-backtick "`"

Error offsets are byte offsets into the UTF-8 encoded formula.
"""
import math, re
from typing import List, NamedTuple, Tuple

from ..errors import DepthExceeded, FormulaSyntaxError
from .nodes import (
    BOOLEAN_OPS,
    COMPARISON_OPS,
    FUNCTIONS,
    KEYWORDS,
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
)

MAX_DEPTH = 64

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<quoted>`[^`]*`)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|==|!=|[-+*/<>(),])
    """,
    re.VERBOSE,
)


class Token(NamedTuple):
    kind: str  # number, column, name, keyword, op, end
    text: str
    offset: int  # byte offset


def tokenize(text: str) -> List[Token]:
    tokens = []
    pos = 0

    def boffset(i):
        return len(text[:i].encode("utf-8"))

    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos] == "`":
                raise FormulaSyntaxError("unterminated back-quoted column", boffset(pos))
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", boffset(pos))
        kind = m.lastgroup
        if kind == "quoted":
            name = m.group()[1:-1]
            if not name:
                raise FormulaSyntaxError("empty column name", boffset(pos))
            tokens.append(Token("column", name, boffset(pos)))
        elif kind == "name":
            word = m.group()
            tokens.append(Token("keyword" if word in KEYWORDS else "name", word, boffset(pos)))
        elif kind == "number" and not math.isfinite(float(m.group())):
            raise FormulaSyntaxError(f"number {m.group()!r} is out of range", boffset(pos))
        elif kind != "ws":
            tokens.append(Token(kind, m.group(), boffset(pos)))
        pos = m.end()
    tokens.append(Token("end", "", boffset(len(text))))
    return tokens


class Parser(object):
    """Parses one formula. Each production returns (node, subtree depth)."""

    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0
        self.nesting = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def error(self, message):
        t = self.tok
        found = "end of input" if t.kind == "end" else repr(t.text)
        raise FormulaSyntaxError(f"{message}, found {found}", t.offset)

    def expect(self, kind, text=None) -> Token:
        t = self.tok
        if t.kind != kind or (text is not None and t.text != text):
            self.error(f"expected {text or kind}")
        return self.advance()

    def at(self, kind, *texts) -> bool:
        return self.tok.kind == kind and (not texts or self.tok.text in texts)

    def node(self, cls, *args, depths) -> Tuple[Node, int]:
        d = 1 + max(depths)
        if d > MAX_DEPTH:
            raise DepthExceeded(f"formula is nested deeper than {MAX_DEPTH} levels")
        return cls(*args), d

    def parse(self) -> FeatureExpr:
        if not self.text.strip():
            raise FormulaSyntaxError("empty formula", 0)
        ast, _ = self.expr()
        if not self.at("end"):
            self.error("expected end of formula")
        return FeatureExpr(ast, self.text)

    def expr(self):
        self.nesting += 1
        if self.nesting > MAX_DEPTH:
            raise DepthExceeded(f"formula is nested deeper than {MAX_DEPTH} levels")
        try:
            return self.or_expr()
        finally:
            self.nesting -= 1

    def _chain(self, sub, kind, ops, cls):
        left, dl = sub()
        while self.at(kind, *ops):
            op = self.advance().text
            right, dr = sub()
            left, dl = self.node(cls, op, left, right, depths=(dl, dr))
        return left, dl

    def or_expr(self):
        return self._chain(self.and_expr, "keyword", ("or",), BoolOp)

    def and_expr(self):
        return self._chain(self.cmp, "keyword", ("and",), BoolOp)

    def cmp(self):
        left, dl = self.sum()
        if self.at("op", *COMPARISON_OPS):
            op = self.advance().text
            right, dr = self.sum()
            left, dl = self.node(Compare, op, left, right, depths=(dl, dr))
            if self.at("op", *COMPARISON_OPS):
                self.error("comparisons cannot be chained")
        return left, dl

    def sum(self):
        return self._chain(self.term, "op", ("+", "-"), Binary)

    def term(self):
        return self._chain(self.factor, "op", ("*", "/"), Binary)

    def factor(self):
        t = self.tok
        if t.kind == "number":
            self.advance()
            return Number(float(t.text)), 1
        if t.kind == "column":
            self.advance()
            return Column(t.text), 1
        if t.kind == "name":
            self.advance()
            if t.text in FUNCTIONS and self.at("op", "("):
                return self.call(t.text)
            return Column(t.text), 1
        if t.kind == "op" and t.text == "(":
            self.advance()
            inner = self.expr()
            self.expect("op", ")")
            return inner
        if t.kind == "op" and t.text == "-":
            self.advance()
            self.nesting += 1
            if self.nesting > MAX_DEPTH:
                raise DepthExceeded(f"formula is nested deeper than {MAX_DEPTH} levels")
            try:
                operand, d = self.factor()
            finally:
                self.nesting -= 1
            return self.node(Unary, "-", operand, depths=(d,))
        if t.kind == "keyword" and t.text == "if":
            self.advance()
            cond, dc = self.expr()
            self.expect("keyword", "then")
            then, dt = self.expr()
            self.expect("keyword", "else")
            orelse, de = self.expr()
            return self.node(Conditional, cond, then, orelse, depths=(dc, dt, de))
        self.error("expected a number, column, function call or '('")

    def call(self, func):
        self.expect("op", "(")
        args, depths = [], []
        arg, d = self.expr()
        args.append(arg)
        depths.append(d)
        while self.at("op", ","):
            self.advance()
            arg, d = self.expr()
            args.append(arg)
            depths.append(d)
        self.expect("op", ")")
        return self.node(Call, func, tuple(args), depths=depths)


def parse(text: str) -> FeatureExpr:
    """Parse a formula string into a :class:`FeatureExpr`.

    Raises
    ------
    FormulaSyntaxError
        malformed input; ``offset`` is the byte offset of the problem
    DepthExceeded
        the tree would be deeper than 64 levels
    """
    return Parser(text).parse()
