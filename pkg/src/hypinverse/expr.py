"""A small expression language for problem data.

Expressions are real-valued formulas in the variables ``x`` and ``t``::

    sin(2*pi*x)*cos(t) + 0.5*(1 + t)^2

Precedence (tightest first): ``^`` (right associative), unary ``-``,
``* /``, ``+ -`` (left associative).  The exponent of ``^`` must be a
constant.  Supported functions are ``sin cos tan exp log sqrt abs``;
constants ``pi`` and ``e``.

Trees are immutable; :func:`evaluate` works on scalars and numpy arrays,
:func:`differentiate` returns a new tree with light constant folding.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

from .errors import HypInverseError

__all__ = [
    "Expr", "Num", "Const", "Var", "Neg", "BinOp", "Call",
    "ParseError", "EvalError", "UnboundVariable", "NonDifferentiable",
    "parse", "evaluate", "differentiate", "to_text", "free_variables",
    "VARIABLES", "FUNCTIONS", "CONSTANTS",
]

VARIABLES = ("x", "t")
FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "abs")
CONSTANTS = {"pi": math.pi, "e": math.e}


class ParseError(HypInverseError, ValueError):
    """Syntax error; ``offset`` is a 0-based byte offset into the source."""

    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = frozenset(expected)
        detail = f"{message} at offset {offset}"
        if self.expected:
            detail += f" (expected one of: {', '.join(sorted(self.expected))})"
        super().__init__(detail)


class EvalError(HypInverseError, ArithmeticError):
    pass


class UnboundVariable(HypInverseError, KeyError):
    pass


class NonDifferentiable(HypInverseError, ValueError):
    pass


# --------------------------------------------------------------------- nodes

class Expr:
    """Base class of expression tree nodes."""

    __slots__ = ()

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Const(Expr):
    name: str


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr


Number = Union[float, np.ndarray]


# ------------------------------------------------------------------- lexing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<pow2>\*\*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # num, ident, op, end
    text: str
    offset: int


def _byte_offset(text, index):
    return len(text[:index].encode("utf-8"))


def _tokenize(text):
    tokens = []
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise ParseError(f"unexpected character {text[i]!r}", _byte_offset(text, i))
        kind = m.lastgroup
        if kind == "pow2":
            raise ParseError("'**' is not an operator; use '^'", _byte_offset(text, i), {"^"})
        if kind != "ws":
            tokens.append(_Tok(kind, m.group(), _byte_offset(text, i)))
        i = m.end()
    tokens.append(_Tok("end", "", _byte_offset(text, len(text))))
    return tokens


# ------------------------------------------------------------------ parsing

_OPERAND_START = {"number", "identifier", "(", "-"}


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def _advance(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def _is(self, text):
        return self.tok.kind == "op" and self.tok.text == text

    def parse(self):
        if self.tok.kind == "end":
            raise ParseError("empty expression", self.tok.offset, _OPERAND_START)
        node = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.offset,
                             {"+", "-", "*", "/", "^", "end of input"})
        return node

    def expr(self):
        node = self.term()
        while self._is("+") or self._is("-"):
            op = self._advance()
            node = BinOp(op.text, node, self.term(), op.offset)
        return node

    def term(self):
        node = self.unary()
        while self._is("*") or self._is("/"):
            op = self._advance()
            node = BinOp(op.text, node, self.unary(), op.offset)
        return node

    def unary(self):
        if self._is("-"):
            self._advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.primary()
        if self._is("^"):
            op = self._advance()
            start = self.tok.offset
            exponent = self.exponent()
            if free_variables(exponent):
                raise ParseError("exponent must be constant", start)
            return BinOp("^", base, exponent, op.offset)
        return base

    def exponent(self):
        if self._is("-"):
            self._advance()
            return Neg(self.exponent())
        return self.power()

    def primary(self):
        tok = self.tok
        if tok.kind == "num":
            self._advance()
            return Num(float(tok.text))
        if tok.kind == "ident":
            self._advance()
            name = tok.text
            if name in FUNCTIONS:
                if not self._is("("):
                    raise ParseError(f"function {name!r} needs an argument", self.tok.offset, {"("})
                self._advance()
                arg = self.expr()
                self._close()
                return Call(name, arg)
            if name in CONSTANTS:
                return Const(name)
            if name in VARIABLES:
                return Var(name)
            raise ParseError(f"unknown identifier {name!r}", tok.offset,
                             set(VARIABLES) | set(CONSTANTS) | set(FUNCTIONS))
        if self._is("("):
            self._advance()
            node = self.expr()
            self._close()
            return node
        what = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ParseError(f"unexpected {what}", tok.offset, _OPERAND_START)

    def _close(self):
        if not self._is(")"):
            raise ParseError("missing ')'", self.tok.offset, {")"})
        self._advance()


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree.

    Raises :class:`ParseError` carrying the byte offset of the offending
    token and the set of tokens that would have been accepted there.
    """
    return _Parser(text).parse()


def free_variables(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset([e.name])
    if isinstance(e, (Num, Const)):
        return frozenset()
    if isinstance(e, (Neg, Call)):
        return free_variables(e.arg)
    return free_variables(e.left) | free_variables(e.right)


# --------------------------------------------------------------- evaluation

def _check(value, message):
    if not np.all(np.isfinite(value)):
        raise EvalError(message)
    return value


def _eval(e, env):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Const):
        return CONSTANTS[e.name]
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise UnboundVariable(e.name) from None
    if isinstance(e, Neg):
        return -_eval(e.arg, env)
    if isinstance(e, Call):
        a = _eval(e.arg, env)
        if e.func == "log" and np.any(np.asarray(a) <= 0):
            raise EvalError("log of a nonpositive number")
        if e.func == "sqrt" and np.any(np.asarray(a) < 0):
            raise EvalError("sqrt of a negative number")
        fn = getattr(np, e.func)
        with np.errstate(all="ignore"):
            return _check(fn(a), f"{e.func} produced a non-finite value")
    a = _eval(e.left, env)
    b = _eval(e.right, env)
    with np.errstate(all="ignore"):
        if e.op == "+":
            out = a + b
        elif e.op == "-":
            out = a - b
        elif e.op == "*":
            out = a * b
        elif e.op == "/":
            if np.any(np.asarray(b) == 0):
                raise EvalError(f"division by zero at offset {e.pos}")
            out = a / b
        else:
            out = np.power(a, b) if isinstance(a, np.ndarray) else _scalar_pow(a, b)
    return _check(out, f"{e.op!r} at offset {e.pos} produced a non-finite value")


def _scalar_pow(a, b):
    try:
        out = float(a) ** float(b)
    except (ZeroDivisionError, OverflowError):
        return math.inf
    return out if isinstance(out, float) else math.nan  # complex result


def evaluate(e: Expr, bindings: Mapping[str, Number] | None = None, **kw) -> Number:
    """Evaluate ``e`` with variables bound from ``bindings`` and keywords.

    Array bindings broadcast with numpy rules.  Non-finite intermediate
    results raise :class:`EvalError`.
    """
    env = dict(bindings or {})
    env.update(kw)
    env = {k: (np.asarray(v, dtype=float) if np.ndim(v) else float(v)) for k, v in env.items()}
    out = _eval(e, env)
    shape = np.broadcast_shapes(*(np.shape(v) for v in env.values())) if env else ()
    if not shape:
        return float(out)
    return np.broadcast_to(out, shape).copy() if np.shape(out) != shape else out


# ---------------------------------------------------------- construction

ZERO = Num(0.0)
ONE = Num(1.0)


def _is_num(e, value=None):
    return isinstance(e, Num) and (value is None or e.value == value)


def _add(a, b):
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    if _is_num(a) and _is_num(b):
        return Num(a.value + b.value)
    return BinOp("+", a, b)


def _sub(a, b):
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return _neg(b)
    if _is_num(a) and _is_num(b):
        return Num(a.value - b.value)
    return BinOp("-", a, b)


def _neg(a):
    if _is_num(a):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _mul(a, b):
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return ZERO
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    if _is_num(a, -1.0):
        return _neg(b)
    if _is_num(b, -1.0):
        return _neg(a)
    if _is_num(a) and _is_num(b):
        return Num(a.value * b.value)
    return BinOp("*", a, b)


def _div(a, b):
    if _is_num(a, 0.0) and not _is_num(b, 0.0):
        return ZERO
    if _is_num(b, 1.0):
        return a
    return BinOp("/", a, b)


def _pow(a, c):
    if _is_num(c, 1.0):
        return a
    if _is_num(c, 0.0):
        return ONE
    return BinOp("^", a, c)


def _call(name, a):
    return Call(name, a)


# ---------------------------------------------------------- differentiation

def differentiate(e: Expr, var: str, order: int = 1) -> Expr:
    """Symbolic derivative of ``e`` with respect to ``var``.

    ``abs`` anywhere in a differentiated subtree raises
    :class:`NonDifferentiable`.
    """
    if var not in VARIABLES:
        raise ValueError(f"unknown variable {var!r}")
    for _ in range(order):
        e = _d(e, var)
    return e


def _d(e, v):
    if isinstance(e, (Num, Const)):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == v else ZERO
    if isinstance(e, Neg):
        return _neg(_d(e.arg, v))
    if isinstance(e, Call):
        a = e.arg
        if e.func == "abs":
            raise NonDifferentiable("abs() has no derivative at 0; use an explicit formula")
        da = _d(a, v)
        if _is_num(da, 0.0):
            return ZERO
        if e.func == "sin":
            outer = _call("cos", a)
        elif e.func == "cos":
            outer = _neg(_call("sin", a))
        elif e.func == "tan":
            outer = _add(ONE, _pow(_call("tan", a), Num(2.0)))
        elif e.func == "exp":
            outer = e
        elif e.func == "log":
            return _div(da, a)
        else:  # sqrt
            return _div(da, _mul(Num(2.0), e))
        return _mul(outer, da)
    a, b = e.left, e.right
    if e.op == "+":
        return _add(_d(a, v), _d(b, v))
    if e.op == "-":
        return _sub(_d(a, v), _d(b, v))
    if e.op == "*":
        return _add(_mul(_d(a, v), b), _mul(a, _d(b, v)))
    if e.op == "/":
        da, db = _d(a, v), _d(b, v)
        if _is_num(db, 0.0):
            return _div(da, b)
        return _div(_sub(_mul(da, b), _mul(a, db)), _pow(b, Num(2.0)))
    # constant exponent
    da = _d(a, v)
    if _is_num(da, 0.0):
        return ZERO
    c = b
    cm1 = Num(c.value - 1.0) if _is_num(c) else BinOp("-", c, ONE)
    return _mul(_mul(c, _pow(a, cm1)), da)


# ------------------------------------------------------------------ printing

_LEVEL = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _level(e):
    if isinstance(e, BinOp):
        return _LEVEL[e.op]
    if isinstance(e, Neg):
        return 3
    if isinstance(e, Num) and (e.value < 0 or math.copysign(1.0, e.value) < 0):
        return 3
    return 5


def _fmt_num(value):
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value)) if value != 0 or math.copysign(1, value) > 0 else "-0"
    return repr(value)


def _wrap(e, min_level):
    s = to_text(e)
    return s if _level(e) >= min_level else f"({s})"


def to_text(e: Expr) -> str:
    """Render ``e`` as source text that :func:`parse` maps back to ``e``."""
    if isinstance(e, Num):
        return _fmt_num(e.value)
    if isinstance(e, (Const, Var)):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    if isinstance(e, Neg):
        return "-" + _wrap(e.arg, 3)
    if e.op in "+-":
        return f"{_wrap(e.left, 1)} {e.op} {_wrap(e.right, 2)}"
    if e.op in "*/":
        return f"{_wrap(e.left, 2)}{e.op}{_wrap(e.right, 3)}"
    base = _wrap(e.left, 5)
    exp = e.right
    # a power or atom may follow '^' bare; a negated exponent stays bare too
    if isinstance(exp, Neg) or (isinstance(exp, Num) and _level(exp) == 3):
        return f"{base}^{to_text(exp)}"
    return f"{base}^{_wrap(exp, 4)}"
