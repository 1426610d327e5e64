"""
Module: expr_parser

A small total expression language for command-line targets.

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := primary ("^" unary)?
    primary := NUMBER | "x" | "pi" | NAME "(" expr ")" | "(" expr ")"

Binary operators are left-associative except the right-associative "^";
"^" binds tighter than unary minus, so -x^2 is -(x^2). Every failure is an
`ExprError` carrying a 0-based source position.
"""

import math
import re
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from src.core.core_types import YTarget
from src.core.errors import (
    EvaluationDomainError,
    ExprLexError,
    ExprSyntaxError,
    TargetProbeError,
    UnknownFunctionError,
)

FUNCTIONS = ("abs", "sqrt", "sin", "cos", "exp_neg_sq", "arctan", "relu")
CONSTANTS = {"pi": math.pi}
MAX_NESTING = 64
PROBE_X = 2.0**20

_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_NAME = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "name", "op", "(", ")", "end"
    text: str
    pos: int


@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class Variable:
    pass


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or a name from FUNCTIONS
    child: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # "+", "-", "*", "/", "^"
    left: "Expr"
    right: "Expr"


Expr = Union[Constant, Variable, Unary, Binary]


def tokenize(src: str) -> List[Token]:
    """Split `src` into tokens; whitespace is skipped."""
    tokens: List[Token] = []
    i = 0
    while i < len(src):
        c = src[i]
        if c.isspace():
            i += 1
            continue
        if c in "+-*/^":
            tokens.append(Token("op", c, i))
            i += 1
            continue
        if c in "()":
            tokens.append(Token(c, c, i))
            i += 1
            continue
        if c.isascii() and (c.isdigit() or c == "."):
            m = _NUMBER.match(src, i)
            if m is None:
                raise ExprLexError(f"malformed number starting with {c!r}", i)
            if not math.isfinite(float(m.group())):
                raise ExprLexError(f"number {m.group()!r} out of range", i)
            tokens.append(Token("num", m.group(), i))
            i = m.end()
            continue
        m = _NAME.match(src, i)
        if m is not None:
            tokens.append(Token("name", m.group(), i))
            i = m.end()
            continue
        raise ExprLexError(f"unexpected character {c!r}", i)
    tokens.append(Token("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.i = 0
        self.nesting = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.current
        if tok.kind != kind:
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise ExprSyntaxError(f"expected {kind!r}, found {found}", tok.pos)
        return self.advance()

    def enter(self, pos: int) -> None:
        self.nesting += 1
        if self.nesting > MAX_NESTING:
            raise ExprSyntaxError(f"expression nested deeper than {MAX_NESTING} levels", pos)

    def expression(self) -> Expr:
        node = self.term()
        while self.current.kind == "op" and self.current.text in "+-":
            op = self.advance().text
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.current.kind == "op" and self.current.text in "*/":
            op = self.advance().text
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        negations = 0
        while self.current.kind == "op" and self.current.text == "-":
            self.advance()
            negations += 1
        node = self.power()
        for _ in range(negations):
            node = Unary("neg", node)
        return node

    def power(self) -> Expr:
        base = self.primary()
        if self.current.kind == "op" and self.current.text == "^":
            tok = self.advance()
            self.enter(tok.pos)
            exponent = self.unary()
            self.nesting -= 1
            return Binary("^", base, exponent)
        return base

    def primary(self) -> Expr:
        tok = self.current
        if tok.kind == "num":
            self.advance()
            return Constant(float(tok.text))
        if tok.kind == "(":
            self.advance()
            self.enter(tok.pos)
            node = self.expression()
            self.nesting -= 1
            self.expect(")")
            return node
        if tok.kind == "name":
            self.advance()
            if tok.text == "x":
                return Variable()
            if tok.text in CONSTANTS:
                return Constant(CONSTANTS[tok.text])
            if tok.text in FUNCTIONS and self.current.kind != "(":
                raise ExprSyntaxError(f"expected '(' after {tok.text}", self.current.pos)
            if self.current.kind != "(":
                raise UnknownFunctionError(f"unknown name {tok.text!r}", tok.pos)
            if tok.text not in FUNCTIONS:
                raise UnknownFunctionError(f"unknown function {tok.text!r}", tok.pos)
            self.enter(self.advance().pos)
            arg = self.expression()
            self.nesting -= 1
            self.expect(")")
            return Unary(tok.text, arg)
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ExprSyntaxError(f"unexpected {found}", tok.pos)


def parse(src: str) -> Expr:
    """
    Parse an expression in x.

    Raises:
        ExprLexError: unknown character or malformed number.
        ExprSyntaxError: unexpected token, missing parenthesis, empty input,
            or parentheses/function calls/exponents nested beyond MAX_NESTING.
        UnknownFunctionError: name that is not x, pi or a known function.
    """
    tokens = tokenize(src)
    if tokens[0].kind == "end":
        raise ExprSyntaxError("empty expression", 0)
    parser = _Parser(tokens)
    ast = parser.expression()
    if parser.current.kind != "end":
        raise ExprSyntaxError(f"unexpected {parser.current.text!r}", parser.current.pos)
    return ast


# Binding strength used by to_source; atoms and calls bind tightest
_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}
_ATOM = 5


def _printed(ast: Expr, parts: List[Tuple[str, int]]) -> Tuple[str, int]:
    if isinstance(ast, Constant):
        text = repr(ast.value)
        return text, (_PRECEDENCE["neg"] if text.startswith("-") else _ATOM)
    if isinstance(ast, Variable):
        return "x", _ATOM
    if isinstance(ast, Unary):
        text, prec = parts.pop()
        if ast.op == "neg":
            return ("-" + (text if prec >= _PRECEDENCE["neg"] else f"({text})")), _PRECEDENCE["neg"]
        return f"{ast.op}({text})", _ATOM
    right, right_prec = parts.pop()
    left, left_prec = parts.pop()
    prec = _PRECEDENCE[ast.op]
    if ast.op == "^":
        # base is a primary, exponent a unary
        left = left if left_prec == _ATOM else f"({left})"
        right = right if right_prec >= _PRECEDENCE["neg"] else f"({right})"
    else:
        left = left if left_prec >= prec else f"({left})"
        right = right if right_prec > prec else f"({right})"
    return f"{left} {ast.op} {right}", prec


def _postorder(ast: Expr):
    """Yield every node after its children, left to right, without recursion."""
    stack = [(ast, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded or isinstance(node, (Constant, Variable)):
            yield node
            continue
        stack.append((node, True))
        if isinstance(node, Unary):
            stack.append((node.child, False))
        else:
            stack.append((node.right, False))
            stack.append((node.left, False))


def to_source(ast: Expr) -> str:
    """Source text with the fewest parentheses that parses back to an equal tree."""
    parts: List[Tuple[str, int]] = []
    for node in _postorder(ast):
        parts.append(_printed(node, parts))
    return parts[0][0]


def _domain_error(op: str, mask, value, x) -> EvaluationDomainError:
    mask = np.broadcast_to(mask, np.shape(x)) if np.ndim(x) else mask
    idx = int(np.argmax(mask)) if np.ndim(mask) else 0
    bad_value = float(np.ravel(np.broadcast_to(value, np.shape(mask)))[idx]) if np.ndim(mask) else float(value)
    bad_x = float(np.ravel(x)[idx]) if np.ndim(x) else float(x)
    return EvaluationDomainError(op, bad_value, bad_x)


def _apply_unary(op: str, v, x):
    if op == "neg":
        return -v
    if op == "abs":
        return np.abs(v)
    if op == "sqrt":
        bad = np.less(v, 0)
        if np.any(bad):
            raise _domain_error("sqrt", bad, v, x)
        return np.sqrt(v)
    if op == "sin":
        return np.sin(v)
    if op == "cos":
        return np.cos(v)
    if op == "exp_neg_sq":
        return np.exp(-np.square(v))
    if op == "arctan":
        return np.arctan(v)
    return np.maximum(v, 0.0)


def _apply_binary(op: str, left, right, x):
    if op == "+":
        return left + right
    if op == "-":
        return left - right
    if op == "*":
        return np.multiply(left, right)
    if op == "/":
        bad = np.equal(right, 0)
        if np.any(bad):
            raise _domain_error("/", bad, right, x)
        return np.divide(left, right)
    # "^": 0 to a negative power, negative base to a fractional power
    zero_neg = np.logical_and(np.equal(left, 0), np.less(right, 0))
    if np.any(zero_neg):
        raise _domain_error("^", zero_neg, left, x)
    frac = np.logical_and(np.less(left, 0), np.not_equal(np.floor(right), right))
    if np.any(frac):
        raise _domain_error("^", frac, left, x)
    return np.power(np.asarray(left, dtype=float), right)


def _eval(ast: Expr, x):
    values = []
    for node in _postorder(ast):
        if isinstance(node, Constant):
            values.append(node.value)
        elif isinstance(node, Variable):
            values.append(x)
        elif isinstance(node, Unary):
            values.append(_apply_unary(node.op, values.pop(), x))
        else:
            right = values.pop()
            values.append(_apply_binary(node.op, values.pop(), right, x))
    return values[0]


def eval_ast(ast: Expr, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    Evaluate the tree at a float or elementwise on an array.

    Raises:
        EvaluationDomainError: sqrt of a negative, division by zero, 0 to a
            negative power or a negative base to a fractional power; the error
            carries the operand and the first offending x.
    """
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if isinstance(x, np.ndarray):
            xs = np.asarray(x, dtype=float)
            return np.asarray(_eval(ast, xs), dtype=float) * np.ones_like(xs)
        return float(_eval(ast, float(x)))


def to_target(ast: Expr, alpha_plus: Optional[float] = None, alpha_minus: Optional[float] = None,
              label: Optional[str] = None) -> YTarget:
    """
    Wrap an expression as a YTarget.

    Missing alphas are left for estimate_alpha at use time. The expression is
    probed at +/-2**20 first.

    Raises:
        TargetProbeError: probe produced a non-finite value or a domain error.
    """
    try:
        probe = eval_ast(ast, np.array([-PROBE_X, PROBE_X]))
    except EvaluationDomainError as exc:
        raise TargetProbeError(f"target not evaluable at large |x|: {exc}") from exc
    if not np.all(np.isfinite(probe)):
        raise TargetProbeError("target not evaluable at large |x|: non-finite value at +/-2^20")
    return YTarget(
        evaluator=lambda x: eval_ast(ast, x),
        alpha_plus=alpha_plus,
        alpha_minus=alpha_minus,
        label=label or to_source(ast),
    )


def parse_target(src: str, alpha_plus: Optional[float] = None,
                 alpha_minus: Optional[float] = None) -> YTarget:
    return to_target(parse(src), alpha_plus, alpha_minus, label=src.strip())
