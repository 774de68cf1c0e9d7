"""Scalar real functions of ``t``: parsing, evaluation, exact derivatives, quadrature.

Grammar (whitespace ignored)::

    expr   := ['-'] term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | power
    power  := atom ['^' factor]            # right-associative
    atom   := NUMBER | 't' | 'pi' | 'e' | FUNC '(' expr ')' | '(' expr ')'

A leading minus negates the whole first term, so ``-2*t`` is ``Neg(Mul(2, t))``
while ``-t^2`` is ``Neg(Pow(t, 2))``.  ``FUNC`` is one of the names in
:data:`FUNCTIONS`.

Trees are immutable.  The parser builds them verbatim; :func:`differentiate`
folds constants and drops trivial ``0``/``1`` operands but performs no other
simplification.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable

from .errors import EvalError, ExprSyntaxError, QuadratureError

__all__ = [
    "Expr", "Const", "Var", "Unary", "Binary", "Integral",
    "FUNCTIONS", "T", "parse", "to_text", "evaluate", "differentiate",
    "antiderivative", "const",
]

FUNCTIONS = ("sin", "cos", "tan", "sinh", "cosh", "tanh", "exp", "log", "sqrt")
BINARY_OPS = ("add", "sub", "mul", "div", "pow")

_SYMBOLS = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}
_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "pow": 4}
_PREC_NEG = 3
_PREC_ATOM = 5


def _finite(x, reason, node, t):
    if not math.isfinite(x):
        raise EvalError(reason, node, t)
    return x


class Expr:
    """Base node.  Subclasses are frozen dataclasses, so ``==`` is structural."""

    def evaluate(self, t: float) -> float:
        raise NotImplementedError

    def derivative(self) -> "Expr":
        raise NotImplementedError

    @property
    def depends_on_t(self) -> bool:
        raise NotImplementedError

    def __str__(self):
        return to_text(self)

    def __call__(self, t):
        return self.evaluate(t)

    # builders for programmatic construction; these fold constants
    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __truediv__(self, other):
        return div(self, _wrap(other))

    def __rtruediv__(self, other):
        return div(_wrap(other), self)

    def __pow__(self, other):
        return power(self, _wrap(other))

    def __neg__(self):
        return neg(self)


@dataclass(frozen=True, eq=True, repr=False)
class Const(Expr):
    value: float

    def evaluate(self, t):
        return self.value

    def derivative(self):
        return ZERO

    @property
    def depends_on_t(self):
        return False

    def __repr__(self):
        return f"Const({self.value!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Var(Expr):
    def evaluate(self, t):
        return float(t)

    def derivative(self):
        return ONE

    @property
    def depends_on_t(self):
        return True

    def __repr__(self):
        return "Var(t)"


def _tan(x):
    return math.sin(x) / math.cos(x) if abs(math.cos(x)) < 1e-300 else math.tan(x)


_UNARY_FUNCS: dict[str, Callable[[float], float]] = {
    "neg": lambda x: -x,
    "sin": math.sin,
    "cos": math.cos,
    "tan": _tan,
    "sinh": math.sinh,
    "cosh": math.cosh,
    "tanh": math.tanh,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
}


@dataclass(frozen=True, eq=True, repr=False)
class Unary(Expr):
    op: str
    child: Expr

    def __post_init__(self):
        if self.op not in _UNARY_FUNCS:
            raise ValueError(f"unknown unary op {self.op!r}")

    def evaluate(self, t):
        x = self.child.evaluate(t)
        op = self.op
        if op == "log" and x <= 0.0:
            raise EvalError("log", self, t)
        if op == "sqrt" and x < 0.0:
            raise EvalError("sqrt", self, t)
        try:
            y = _UNARY_FUNCS[op](x)
        except OverflowError:
            raise EvalError("overflow", self, t) from None
        except (ValueError, ZeroDivisionError):
            raise EvalError(op, self, t) from None
        return _finite(y, "overflow", self, t)

    def derivative(self):
        u = self.child
        du = u.derivative()
        op = self.op
        if op == "neg":
            return neg(du)
        if op == "sin":
            outer = Unary("cos", u)
        elif op == "cos":
            outer = neg(Unary("sin", u))
        elif op == "tan":
            outer = div(ONE, power(Unary("cos", u), Const(2.0)))
        elif op == "sinh":
            outer = Unary("cosh", u)
        elif op == "cosh":
            outer = Unary("sinh", u)
        elif op == "tanh":
            outer = sub(ONE, power(self, Const(2.0)))
        elif op == "exp":
            outer = self
        elif op == "log":
            return div(du, u)
        else:  # sqrt
            return div(du, mul(Const(2.0), self))
        return mul(outer, du)

    @property
    def depends_on_t(self):
        return self.child.depends_on_t

    def __repr__(self):
        return f"{self.op.capitalize()}({self.child!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown binary op {self.op!r}")

    def evaluate(self, t):
        a = self.left.evaluate(t)
        b = self.right.evaluate(t)
        op = self.op
        if op == "add":
            y = a + b
        elif op == "sub":
            y = a - b
        elif op == "mul":
            y = a * b
        elif op == "div":
            if b == 0.0:
                raise EvalError("div", self, t)
            y = a / b
        else:
            if a < 0.0 and not float(b).is_integer():
                raise EvalError("pow", self, t)
            if a == 0.0 and b < 0.0:
                raise EvalError("div", self, t)
            try:
                y = math.pow(a, b)
            except OverflowError:
                raise EvalError("overflow", self, t) from None
            except ValueError:
                raise EvalError("pow", self, t) from None
        return _finite(y, "overflow", self, t)

    def derivative(self):
        u, v = self.left, self.right
        op = self.op
        if op in ("add", "sub"):
            du, dv = u.derivative(), v.derivative()
            return add(du, dv) if op == "add" else sub(du, dv)
        if op == "mul":
            return add(mul(u.derivative(), v), mul(u, v.derivative()))
        if op == "div":
            num = sub(mul(u.derivative(), v), mul(u, v.derivative()))
            return div(num, power(v, Const(2.0)))
        # pow
        if not v.depends_on_t:
            return mul(mul(v, power(u, sub(v, ONE))), u.derivative())
        if not u.depends_on_t:
            return mul(mul(self, Unary("log", u)), v.derivative())
        inner = add(mul(v.derivative(), Unary("log", u)),
                    div(mul(v, u.derivative()), u))
        return mul(self, inner)

    @property
    def depends_on_t(self):
        return self.left.depends_on_t or self.right.depends_on_t

    def __repr__(self):
        return f"{self.op.capitalize()}({self.left!r}, {self.right!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Integral(Expr):
    """``t -> integral of integrand over [0, t]`` by adaptive Simpson.

    Not part of the text grammar; it exists so that coefficients built from a
    running integral stay differentiable.  Values are memoized per node, and
    the integral from 0 is accumulated through anchors spaced ``anchor`` apart
    so each evaluation only integrates a short tail.
    """

    integrand: Expr
    tol: float = 1e-10
    anchor: float = 0.25
    _memo: dict = field(default_factory=dict, compare=False, hash=False)

    def _anchor_value(self, k):
        memo = self._memo
        key = ("anchor", k)
        if key in memo:
            return memo[key]
        step = 1 if k > 0 else -1
        j = k - step
        while j != 0 and ("anchor", j) not in memo:
            j -= step
        acc = 0.0 if j == 0 else memo[("anchor", j)]
        while j != k:
            nxt = j + step
            acc += antiderivative(self.integrand, j * self.anchor,
                                  nxt * self.anchor, self.tol)
            j = nxt
            memo[("anchor", j)] = acc
        return acc

    def evaluate(self, t):
        t = float(t)
        memo = self._memo
        if t in memo:
            return memo[t]
        k = int(t / self.anchor)
        try:
            base = self._anchor_value(k) if k else 0.0
            value = base + antiderivative(self.integrand, k * self.anchor, t,
                                          self.tol, panels=1)
        except QuadratureError as exc:
            raise EvalError(f"quadrature: {exc}", self, t) from exc
        if len(memo) > 4096:
            memo.clear()
        memo[t] = value
        return value

    def derivative(self):
        return self.integrand

    @property
    def depends_on_t(self):
        return True

    def __repr__(self):
        return f"Integral({self.integrand!r})"


T = Var()
ZERO = Const(0.0)
ONE = Const(1.0)


def const(value) -> Const:
    return Const(float(value))


def _wrap(x):
    return x if isinstance(x, Expr) else const(x)


# folding constructors ---------------------------------------------------------

def _is_const(e, value=None):
    return isinstance(e, Const) and (value is None or e.value == value)


def _fold(node):
    try:
        return Const(node.evaluate(0.0))
    except EvalError:
        return node


def neg(u):
    if _is_const(u):
        return Const(-u.value)
    if isinstance(u, Unary) and u.op == "neg":
        return u.child
    return Unary("neg", u)


def add(u, v):
    if _is_const(u, 0.0):
        return v
    if _is_const(v, 0.0):
        return u
    if _is_const(u) and _is_const(v):
        return _fold(Binary("add", u, v))
    return Binary("add", u, v)


def sub(u, v):
    if _is_const(v, 0.0):
        return u
    if _is_const(u, 0.0):
        return neg(v)
    if _is_const(u) and _is_const(v):
        return _fold(Binary("sub", u, v))
    return Binary("sub", u, v)


def mul(u, v):
    if _is_const(u, 0.0) or _is_const(v, 0.0):
        return ZERO
    if _is_const(u, 1.0):
        return v
    if _is_const(v, 1.0):
        return u
    if _is_const(u, -1.0):
        return neg(v)
    if _is_const(v, -1.0):
        return neg(u)
    if _is_const(u) and _is_const(v):
        return _fold(Binary("mul", u, v))
    return Binary("mul", u, v)


def div(u, v):
    if _is_const(v, 1.0):
        return u
    if _is_const(u, 0.0) and not _is_const(v, 0.0):
        return ZERO
    if _is_const(u) and _is_const(v):
        return _fold(Binary("div", u, v))
    return Binary("div", u, v)


def power(u, v):
    if _is_const(v, 0.0):
        return ONE
    if _is_const(v, 1.0):
        return u
    if _is_const(u) and _is_const(v):
        return _fold(Binary("pow", u, v))
    return Binary("pow", u, v)


# public operations ------------------------------------------------------------

def evaluate(f: Expr, t: float) -> float:
    """Value of ``f`` at ``t``; raises :class:`EvalError` on a non-finite result."""
    return f.evaluate(t)


def differentiate(f: Expr) -> Expr:
    return f.derivative()


def _simpson(fa, fm, fb, a, b):
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def antiderivative(f, a: float, b: float, tol: float = 1e-10, max_depth: int = 50,
                   panels: int = 4) -> float:
    """Integral of ``f`` over ``[a, b]`` by adaptive Simpson, absolute error target ``tol``.

    ``f`` may be an :class:`Expr` or any callable of one float.  Swapping the
    limits negates the result exactly.  Starting from several ``panels``
    guards against false convergence when the first samples happen to be
    symmetric (e.g. ``sin`` over a full period).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a, b = float(a), float(b)
    if a == b:
        return 0.0
    if a > b:
        return -antiderivative(f, b, a, tol, max_depth, panels)
    fn = f.evaluate if isinstance(f, Expr) else f

    def value(x):
        try:
            y = fn(x)
        except EvalError as exc:
            raise QuadratureError(f"integrand not finite at t={x!r}: {exc}") from exc
        if not math.isfinite(y):
            raise QuadratureError(f"integrand not finite at t={x!r}")
        return y

    # explicit stack; each entry is one panel with its cached samples
    total = 0.0
    edges = [a + (b - a) * k / panels for k in range(panels)] + [b]
    stack = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = 0.5 * (lo + hi)
        flo, fm, fhi = value(lo), value(m), value(hi)
        stack.append((lo, hi, flo, fm, fhi, _simpson(flo, fm, fhi, lo, hi),
                      tol / panels, 1))
    while stack:
        lo, hi, flo, fm, fhi, whole, eps, depth = stack.pop()
        m = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + m), 0.5 * (m + hi)
        flm, frm = value(lm), value(rm)
        left = _simpson(flo, flm, fm, lo, m)
        right = _simpson(fm, frm, fhi, m, hi)
        delta = left + right - whole
        if abs(delta) <= 15.0 * eps:
            total += left + right + delta / 15.0
            continue
        if depth >= max_depth:
            raise QuadratureError(
                f"subdivision limit (depth {max_depth}) reached near t={m!r}")
        stack.append((m, hi, fm, frm, fhi, right, eps / 2.0, depth + 1))
        stack.append((lo, m, flo, flm, fm, left, eps / 2.0, depth + 1))
    return total


# printing ---------------------------------------------------------------------

def _format_number(x):
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _prec(e):
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary) and e.op == "neg":
        return _PREC_NEG
    if isinstance(e, Const) and (e.value < 0 or math.copysign(1.0, e.value) < 0):
        return _PREC_NEG
    return _PREC_ATOM


def to_text(e: Expr) -> str:
    """Render ``e`` in the grammar accepted by :func:`parse`.

    For trees produced by :func:`parse`, ``parse(to_text(tree)) == tree``.
    """
    if isinstance(e, Const):
        s = _format_number(abs(e.value))
        return f"-{s}" if _prec(e) == _PREC_NEG else s
    if isinstance(e, Var):
        return "t"
    if isinstance(e, Integral):
        return f"integral0({to_text(e.integrand)})"
    if isinstance(e, Unary):
        inner = to_text(e.child)
        if e.op != "neg":
            return f"{e.op}({inner})"
        if _prec(e.child) < 4:
            inner = f"({inner})"
        return f"-{inner}"
    # Binary
    p = _PREC[e.op]
    lhs, rhs = to_text(e.left), to_text(e.right)
    lp, rp = _prec(e.left), _prec(e.right)
    if lp == _PREC_NEG:
        lhs = f"({lhs})"
    elif lp < p or (e.op == "pow" and lp <= p):
        lhs = f"({lhs})"
    if rp == _PREC_NEG:
        rhs = f"({rhs})"
    elif rp < p or (e.op != "pow" and rp <= p):
        rhs = f"({rhs})"
    return f"{lhs}{_SYMBOLS[e.op]}{rhs}" if e.op in ("mul", "div", "pow") \
        else f"{lhs} {_SYMBOLS[e.op]} {rhs}"


# parsing ----------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<pow2>\*\*)
  | (?P<op>[-+*/^])
  | (?P<lpar>\()
  | (?P<rpar>\))
""", re.VERBOSE)


def _byte_offset(text, index):
    return len(text[:index].encode("utf-8"))


def _tokenize(text):
    tokens = []
    i = 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[i]!r}", text,
                                  _byte_offset(text, i))
        kind = m.lastgroup
        if kind == "pow2":
            raise ExprSyntaxError("unknown token '**' (use '^')", text,
                                  _byte_offset(text, i))
        if kind != "ws":
            tokens.append((kind, m.group(), i))
        i = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message, tok):
        return ExprSyntaxError(message, self.text, _byte_offset(self.text, tok[2]))

    def expect(self, kind, value=None):
        tok = self.peek()
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = value or kind
            got = tok[1] or "end of input"
            raise self.error(f"expected {want!r}, got {got!r}", tok)
        return self.advance()

    def parse(self):
        tree = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            if tok[0] == "rpar":
                raise self.error("unbalanced ')'", tok)
            raise self.error(f"unexpected {tok[1]!r}", tok)
        return tree

    def expr(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.advance()
            node = Unary("neg", self.term())
        else:
            node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = "add" if self.advance()[1] == "+" else "sub"
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = "mul" if self.advance()[1] == "*" else "div"
            node = Binary(op, node, self.factor())
        return node

    def factor(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.advance()
            return Unary("neg", self.factor())
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "^":
            self.advance()
            return Binary("pow", base, self.factor())
        return base

    def atom(self):
        tok = self.advance()
        kind, value, _ = tok
        if kind == "num":
            return Const(float(value))
        if kind == "name":
            if value == "t":
                return T
            if value == "pi":
                return Const(math.pi)
            if value == "e":
                return Const(math.e)
            if value in FUNCTIONS:
                self.expect("lpar")
                arg = self.expr()
                closing = self.peek()
                if closing[0] != "rpar":
                    raise self.error("unbalanced '(': expected ')'", closing)
                self.advance()
                return Unary(value, arg)
            raise self.error(f"unknown name {value!r}", tok)
        if kind == "lpar":
            inner = self.expr()
            closing = self.peek()
            if closing[0] != "rpar":
                raise self.error("unbalanced '(': expected ')'", closing)
            self.advance()
            return inner
        if kind == "end":
            raise self.error("unexpected end of input", tok)
        if kind == "rpar":
            raise self.error("unbalanced ')'", tok)
        raise self.error(f"unexpected {value!r}", tok)


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree.

    >>> parse("t^2 + 1")
    Add(Pow(Var(t), Const(2.0)), Const(1.0))
    """
    if not isinstance(text, str):
        raise TypeError("expression must be a string")
    return _Parser(text).parse()
