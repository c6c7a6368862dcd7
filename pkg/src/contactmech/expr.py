"""Scalar expressions over chart variables and parameters.

Grammar (infix, ``^`` binds tightest, then unary minus, then ``* /``,
then ``+ -``; ``+ - * /`` associate left, ``^`` associates right)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Known functions: sin, cos, exp, log, sqrt, abs.  Implicit multiplication
is rejected ("2x" is a syntax error), and every identifier must resolve
to a declared name at parse time.

Derivatives are exact: evaluation propagates first-order dual numbers
through the tree, and dual parts may themselves be duals, so nested
differentiation (second derivatives of composite fields) works without
finite differencing.  Expressions are immutable and evaluation is pure,
so concurrent use from any number of threads is safe.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Union

__all__ = [
    "Bindings",
    "DomainError",
    "Dual",
    "Expression",
    "ExpressionError",
    "FUNCTIONS",
    "MissingBindingError",
    "ParseError",
    "UnknownNameError",
    "add",
    "call",
    "div",
    "finite_difference",
    "literal",
    "mul",
    "neg",
    "parse",
    "partial_deriv",
    "power",
    "sub",
    "substitute",
    "variable",
]

#: Names -> values; must bind every name an expression references.
Bindings = Mapping[str, float]

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "abs")


class ExpressionError(Exception):
    """Base class for expression engine errors."""


class ParseError(ExpressionError):
    """Malformed source text; ``position`` is a 0-based character offset."""

    def __init__(self, message: str, source: str, position: int):
        super().__init__(f"{message} (position {position})")
        self.source = source
        self.position = position


class UnknownNameError(ParseError):
    """Identifier does not resolve to a declared name."""

    def __init__(self, name: str, source: str, position: int):
        ParseError.__init__(
            self, f"unknown identifier '{name}'", source, position
        )
        self.name = name


class MissingBindingError(ExpressionError):
    """Evaluation requested with an unbound name."""

    def __init__(self, name: str):
        super().__init__(f"no value bound for '{name}'")
        self.name = name


class DomainError(ExpressionError):
    """Arithmetic left the real domain (log of non-positive, division by
    zero, negative base with fractional power, overflow)."""


# ---------------------------------------------------------------------------
# Dual numbers
# ---------------------------------------------------------------------------

class Dual:
    """First-order dual number ``val + eps * d``.

    ``val`` and ``eps`` may themselves be duals; nesting levels are kept
    separate by construction (inner seeds lift every value one level), which
    is what makes exact second derivatives possible.
    """

    __slots__ = ("val", "eps")

    def __init__(self, val, eps=0.0):
        self.val = val
        self.eps = eps

    def __repr__(self):
        return f"Dual({self.val!r}, {self.eps!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.eps + other.eps)
        return Dual(self.val + other, self.eps)

    def __radd__(self, other):
        return Dual(other + self.val, self.eps)

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.eps - other.eps)
        return Dual(self.val - other, self.eps)

    def __rsub__(self, other):
        return Dual(other - self.val, -self.eps)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.val * other.val,
                self.val * other.eps + self.eps * other.val,
            )
        return Dual(self.val * other, self.eps * other)

    def __rmul__(self, other):
        return Dual(other * self.val, other * self.eps)

    def __truediv__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.val / other.val,
                (self.eps * other.val - self.val * other.eps)
                / (other.val * other.val),
            )
        return Dual(self.val / other, self.eps / other)

    def __rtruediv__(self, other):
        return Dual(
            other / self.val, -(other * self.eps) / (self.val * self.val)
        )

    def __neg__(self):
        return Dual(-self.val, -self.eps)

    def __pos__(self):
        return self

    def __pow__(self, other):
        return _pow(self, other)

    def __rpow__(self, other):
        return _pow(other, self)


def _real(x):
    """Innermost real part of a possibly nested dual."""
    while isinstance(x, Dual):
        x = x.val
    return x


def _sin(x):
    if isinstance(x, Dual):
        return Dual(_sin(x.val), _cos(x.val) * x.eps)
    return math.sin(x)


def _cos(x):
    if isinstance(x, Dual):
        return Dual(_cos(x.val), -_sin(x.val) * x.eps)
    return math.cos(x)


def _exp(x):
    if isinstance(x, Dual):
        v = _exp(x.val)
        return Dual(v, v * x.eps)
    return math.exp(x)


def _log(x):
    if isinstance(x, Dual):
        return Dual(_log(x.val), x.eps / x.val)
    return math.log(x)


def _sqrt(x):
    if isinstance(x, Dual):
        v = _sqrt(x.val)
        return Dual(v, x.eps / (2.0 * v))
    return math.sqrt(x)


def _abs(x):
    if isinstance(x, Dual):
        r = _real(x.val)
        sign = 1.0 if r > 0.0 else (-1.0 if r < 0.0 else 0.0)
        return Dual(_abs(x.val), sign * x.eps)
    return abs(x)


def _pow(base, exponent):
    if isinstance(exponent, Dual):
        # Variable exponent: base^e = exp(e*log(base)); needs base > 0.
        return _exp(exponent * _log(base))
    if isinstance(base, Dual):
        if exponent == 0.0:
            return 1.0
        return Dual(
            _pow(base.val, exponent),
            (exponent * _pow(base.val, exponent - 1.0)) * base.eps,
        )
    if base < 0.0 and not float(exponent).is_integer():
        raise DomainError(
            f"negative base {base!r} with fractional exponent {exponent!r}"
        )
    return math.pow(base, exponent)


_FUNC_IMPL = {
    "sin": _sin,
    "cos": _cos,
    "exp": _exp,
    "log": _log,
    "sqrt": _sqrt,
    "abs": _abs,
}


def _partial_eval(fn, name, env):
    """Dual part of ``fn`` seeded in direction ``name``.

    Every binding is lifted one dual level, so an outer differentiation in
    progress stays distinct from this inner one.
    """
    lifted = {
        k: Dual(v, 1.0 if k == name else 0.0) for k, v in env.items()
    }
    out = fn(lifted)
    return out.eps if isinstance(out, Dual) else 0.0


# ---------------------------------------------------------------------------
# Syntax tree
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class Bin:
    op: str  # one of + - * / ^
    lhs: "Node"
    rhs: "Node"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Node"


@dataclass(frozen=True)
class Partial:
    """First partial derivative of ``arg`` with respect to ``var``.

    Never produced by the parser; assembled internally to materialize
    Hamiltonian vector-field components as evaluable trees.
    """

    arg: "Node"
    var: str


Node = Union[Num, Var, Neg, Bin, Call, Partial]


def _collect_names(node: Node, out: set) -> None:
    if isinstance(node, Var):
        out.add(node.name)
    elif isinstance(node, Neg):
        _collect_names(node.arg, out)
    elif isinstance(node, Bin):
        _collect_names(node.lhs, out)
        _collect_names(node.rhs, out)
    elif isinstance(node, Call):
        _collect_names(node.arg, out)
    elif isinstance(node, Partial):
        _collect_names(node.arg, out)
        out.add(node.var)


# Printer precedence levels; a negative literal prints like a unary minus.
_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 10, 20, 30, 40, 50


def _node_prec(node: Node) -> int:
    if isinstance(node, Bin):
        if node.op in "+-":
            return _PREC_ADD
        if node.op in "*/":
            return _PREC_MUL
        return _PREC_POW
    if isinstance(node, Neg):
        return _PREC_NEG
    if isinstance(node, Num) and node.value < 0.0:
        return _PREC_NEG
    return _PREC_ATOM


def _to_source(node: Node) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        inner = _to_source(node.arg)
        if _node_prec(node.arg) <= _PREC_MUL:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Call):
        return f"{node.fn}({_to_source(node.arg)})"
    if isinstance(node, Partial):
        return f"d({_to_source(node.arg)})/d({node.var})"
    prec = _node_prec(node)
    lhs = _to_source(node.lhs)
    rhs = _to_source(node.rhs)
    if node.op == "^":
        # right-associative: parenthesize any non-atomic left operand
        if _node_prec(node.lhs) <= _PREC_POW:
            lhs = f"({lhs})"
        if _node_prec(node.rhs) < _PREC_NEG:
            rhs = f"({rhs})"
        return f"{lhs}{node.op}{rhs}"
    if _node_prec(node.lhs) < prec:
        lhs = f"({lhs})"
    if _node_prec(node.rhs) <= prec:
        rhs = f"({rhs})"
    return f"{lhs} {node.op} {rhs}"


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------

def _compile(root: Node) -> Callable[[dict], object]:
    """Compile a tree into a Python function of one bindings dict."""
    env = {
        "_pw": _pow,
        "_pd": _partial_eval,
        **{f"_{name}": impl for name, impl in _FUNC_IMPL.items()},
    }
    counter = itertools.count()

    def emit(node: Node) -> str:
        if isinstance(node, Num):
            return repr(node.value)
        if isinstance(node, Var):
            return f"_b[{node.name!r}]"
        if isinstance(node, Neg):
            return f"(-{emit(node.arg)})"
        if isinstance(node, Bin):
            if node.op == "^":
                return f"_pw({emit(node.lhs)}, {emit(node.rhs)})"
            return f"({emit(node.lhs)} {node.op} {emit(node.rhs)})"
        if isinstance(node, Call):
            return f"_{node.fn}({emit(node.arg)})"
        child = _compile(node.arg)
        name = f"_c{next(counter)}"
        env[name] = child
        return f"_pd({name}, {node.var!r}, _b)"

    src = f"def _expr_fn(_b):\n    return {emit(root)}\n"
    exec(compile(src, "<chart-expression>", "exec"), env)
    return env["_expr_fn"]


class Expression:
    """Immutable scalar field on the chart, evaluable with exact derivatives."""

    __slots__ = ("root", "names", "_fn")

    def __init__(self, root: Node):
        self.root = root
        names: set = set()
        _collect_names(root, names)
        self.names = frozenset(names)
        self._fn = None

    def _compiled(self):
        # benign race: compilation is deterministic and idempotent
        if self._fn is None:
            self._fn = _compile(self.root)
        return self._fn

    def _run(self, env: dict):
        try:
            return self._compiled()(env)
        except KeyError as exc:
            raise MissingBindingError(exc.args[0]) from None
        except ZeroDivisionError as exc:
            raise DomainError(f"division by zero: {exc}") from None
        except OverflowError as exc:
            raise DomainError(f"overflow: {exc}") from None
        except ValueError as exc:
            raise DomainError(str(exc)) from None

    def evaluate(self, bindings: Bindings) -> float:
        """Value at ``bindings``; every referenced name must be bound."""
        env = {k: float(v) for k, v in bindings.items()}
        return self._run(env)

    def differentiate(self, var: str, bindings: Bindings) -> float:
        """Exact first partial with respect to ``var`` at ``bindings``."""
        env = {k: float(v) for k, v in bindings.items()}
        if var not in env:
            raise MissingBindingError(var)
        env[var] = Dual(env[var], 1.0)
        out = self._run(env)
        return out.eps if isinstance(out, Dual) else 0.0

    def __str__(self) -> str:
        return _to_source(self.root)

    def __repr__(self) -> str:
        return f"Expression({_to_source(self.root)!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Expression) and self.root == other.root

    def __hash__(self) -> int:
        return hash(self.root)


def finite_difference(
    expr: Expression, var: str, bindings: Bindings, h: float | None = None
) -> float:
    """Central-difference estimate of a partial; cross-check oracle only."""
    x = float(bindings[var])
    if h is None:
        h = 1e-5 * max(1.0, abs(x))
    lo = dict(bindings)
    hi = dict(bindings)
    lo[var] = x - h
    hi[var] = x + h
    return (expr.evaluate(hi) - expr.evaluate(lo)) / (2.0 * h)


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Token:
    kind: str  # num | name | op | lparen | rparen | end
    text: str
    pos: int


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c.isspace():
            i += 1
            continue
        if c in "+-*/^":
            tokens.append(_Token("op", c, i))
            i += 1
        elif c == "(":
            tokens.append(_Token("lparen", c, i))
            i += 1
        elif c == ")":
            tokens.append(_Token("rparen", c, i))
            i += 1
        elif c.isdigit() or (c == "." and i + 1 < n and source[i + 1].isdigit()):
            j = i
            while j < n and (source[j].isdigit() or source[j] == "."):
                j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    j = k
                    while j < n and source[j].isdigit():
                        j += 1
            text = source[i:j]
            try:
                value = float(text)
            except ValueError:
                raise ParseError(f"bad numeric literal '{text}'", source, i)
            if not math.isfinite(value):
                raise ParseError(f"numeric literal '{text}' overflows", source, i)
            tokens.append(_Token("num", text, i))
            i = j
        elif c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(_Token("name", source[i:j], i))
            i = j
        else:
            raise ParseError(f"unexpected character {c!r}", source, i)
    tokens.append(_Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, source: str, names: frozenset):
        self.source = source
        self.names = names
        self.tokens = _tokenize(source)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str, tok: _Token):
        raise ParseError(message, self.source, tok.pos)

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            self.fail(f"unexpected token {tok.text!r}", tok)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            node = Bin(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            node = Bin(op, node, self.unary())
        return node

    def unary(self) -> Node:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        node = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            return Bin("^", node, self.unary())
        return node

    def atom(self) -> Node:
        tok = self.advance()
        if tok.kind == "num":
            return Num(float(tok.text))
        if tok.kind == "lparen":
            node = self.expr()
            closing = self.advance()
            if closing.kind != "rparen":
                self.fail(
                    f"expected ')', found {closing.text or 'end of input'!r}",
                    closing,
                )
            return node
        if tok.kind == "name":
            if self.peek().kind == "lparen":
                if tok.text not in FUNCTIONS:
                    self.fail(f"unknown function '{tok.text}'", tok)
                self.advance()
                arg = self.expr()
                closing = self.advance()
                if closing.kind != "rparen":
                    self.fail(
                        f"expected ')', found {closing.text or 'end of input'!r}",
                        closing,
                    )
                return Call(tok.text, arg)
            if tok.text not in self.names:
                raise UnknownNameError(tok.text, self.source, tok.pos)
            return Var(tok.text)
        self.fail(
            f"expected expression, found {tok.text or 'end of input'!r}", tok
        )


def parse(source: str, names: Iterable[str]) -> Expression:
    """Parse ``source`` against the declared ``names``.

    Raises ParseError (with position) on malformed input and
    UnknownNameError when an identifier is not declared.
    """
    if not source or not source.strip():
        raise ParseError("empty expression", source or "", 0)
    declared = frozenset(names)
    reserved = declared.intersection(FUNCTIONS)
    if reserved:
        raise ValueError(
            f"declared names shadow built-in functions: {sorted(reserved)}"
        )
    return Expression(_Parser(source, declared).parse())


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------
#
# Used when assembling derived fields (Noether quantities, Hamiltonian
# vector-field components, quotients, pullbacks).  They fold the obvious
# identities (x+0, 1*x, 0*x, --x, constant arithmetic) so assembled
# expressions stay readable; user-parsed trees are never rewritten.

def _as_node(e) -> Node:
    if isinstance(e, Expression):
        return e.root
    if isinstance(e, (int, float)):
        return Num(float(e))
    if isinstance(e, (Num, Var, Neg, Bin, Call, Partial)):
        return e
    raise TypeError(f"cannot use {type(e).__name__} as an expression")


def _is_const(node: Node, value: float | None = None) -> bool:
    if not isinstance(node, Num):
        return False
    return value is None or node.value == value


def literal(value: float) -> Expression:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"literal must be finite, got {value!r}")
    return Expression(Num(value))


def variable(name: str) -> Expression:
    return Expression(Var(name))


def neg(e) -> Expression:
    node = _as_node(e)
    if isinstance(node, Num):
        return Expression(Num(-node.value))
    if isinstance(node, Neg):
        return Expression(node.arg)
    return Expression(Neg(node))


def add(a, b) -> Expression:
    x, y = _as_node(a), _as_node(b)
    if isinstance(x, Num) and isinstance(y, Num):
        return literal(x.value + y.value)
    if _is_const(x, 0.0):
        return Expression(y)
    if _is_const(y, 0.0):
        return Expression(x)
    return Expression(Bin("+", x, y))


def sub(a, b) -> Expression:
    x, y = _as_node(a), _as_node(b)
    if isinstance(x, Num) and isinstance(y, Num):
        return literal(x.value - y.value)
    if _is_const(y, 0.0):
        return Expression(x)
    if _is_const(x, 0.0):
        return neg(y)
    return Expression(Bin("-", x, y))


def mul(a, b) -> Expression:
    x, y = _as_node(a), _as_node(b)
    if isinstance(x, Num) and isinstance(y, Num):
        return literal(x.value * y.value)
    if _is_const(x, 0.0) or _is_const(y, 0.0):
        return literal(0.0)
    if _is_const(x, 1.0):
        return Expression(y)
    if _is_const(y, 1.0):
        return Expression(x)
    return Expression(Bin("*", x, y))


def div(a, b) -> Expression:
    x, y = _as_node(a), _as_node(b)
    if _is_const(y, 1.0):
        return Expression(x)
    # x/0 is left in the tree so evaluation reports the domain error
    if isinstance(x, Num) and isinstance(y, Num) and y.value != 0.0:
        return literal(x.value / y.value)
    return Expression(Bin("/", x, y))


def power(a, b) -> Expression:
    x, y = _as_node(a), _as_node(b)
    if isinstance(x, Num) and isinstance(y, Num):
        return literal(_pow(x.value, y.value))
    return Expression(Bin("^", x, y))


def call(fn: str, e) -> Expression:
    if fn not in FUNCTIONS:
        raise ValueError(f"unknown function '{fn}'")
    return Expression(Call(fn, _as_node(e)))


def partial_deriv(e, var: str) -> Expression:
    """Tree node for the first partial of ``e`` with respect to ``var``.

    Evaluating it runs a nested dual pass over the child tree, so
    differentiating the result again yields exact second derivatives.
    """
    node = _as_node(e)
    if isinstance(node, Num):
        return literal(0.0)
    return Expression(Partial(node, var))


def substitute(e: Expression, replacements: Mapping[str, "Expression"]) -> Expression:
    """Replace variables by expressions (exact rebuild, no folding)."""
    repl = {name: _as_node(r) for name, r in replacements.items()}

    def walk(node: Node) -> Node:
        if isinstance(node, Var):
            return repl.get(node.name, node)
        if isinstance(node, Neg):
            return Neg(walk(node.arg))
        if isinstance(node, Bin):
            return Bin(node.op, walk(node.lhs), walk(node.rhs))
        if isinstance(node, Call):
            return Call(node.fn, walk(node.arg))
        if isinstance(node, Partial):
            if node.var in repl:
                raise ValueError(
                    f"cannot substitute '{node.var}' under a derivative"
                )
            return Partial(walk(node.arg), node.var)
        return node

    return Expression(walk(e.root))
