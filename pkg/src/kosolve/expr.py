"""Scalar expression DSL for user-supplied coefficients and nonlinearities.

Grammar (usual precedence, ``^`` right-associative and binding tighter
than unary minus, so ``-2^2 == -4``)::

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := ('-' | '+') unary | power
    power := atom ('^' unary)?
    atom  := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Only the functions in ``FUNCTIONS`` may be called.  Evaluation works on
Python floats and on numpy arrays alike; domain violations raise
:class:`DomainError` instead of producing complex numbers or NaNs.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import DomainError, ExprSyntaxError, UnknownVariable

FUNCTIONS = {"exp": 1, "log": 1, "sqrt": 1, "abs": 1, "min": 2, "max": 2, "pow": 2}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Node = Union[Num, Var, Neg, BinOp, Call]


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(bad, f"unexpected character {text[bad]!r}", text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, allowed):
        self.text = text
        self.allowed = allowed
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def error(self, message, position=None):
        if position is None:
            position = self.tok[2]
        raise ExprSyntaxError(position, message, self.text)

    def accept(self, value):
        kind, val, _ = self.tok
        if kind == "op" and val == value:
            self.i += 1
            return True
        return False

    def expect(self, value):
        if not self.accept(value):
            found = self.tok[1] or "end of input"
            self.error(f"expected {value!r}, found {found!r}")

    def parse(self):
        node = self.expr()
        if self.tok[0] != "end":
            self.error(f"unexpected {self.tok[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while True:
            if self.accept("+"):
                node = BinOp("+", node, self.term())
            elif self.accept("-"):
                node = BinOp("-", node, self.term())
            else:
                return node

    def term(self):
        node = self.unary()
        while True:
            if self.accept("*"):
                node = BinOp("*", node, self.unary())
            elif self.accept("/"):
                node = BinOp("/", node, self.unary())
            else:
                return node

    def unary(self):
        if self.accept("-"):
            return Neg(self.unary())
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self):
        node = self.atom()
        if self.accept("^"):
            node = BinOp("^", node, self.unary())
        return node

    def atom(self):
        kind, val, pos = self.tok
        if kind == "num":
            self.i += 1
            return Num(float(val))
        if kind == "name":
            self.i += 1
            if self.accept("("):
                if val not in FUNCTIONS:
                    self.error(f"unknown function {val!r}", pos)
                args = [self.expr()]
                while self.accept(","):
                    args.append(self.expr())
                self.expect(")")
                if len(args) != FUNCTIONS[val]:
                    self.error(f"{val} takes {FUNCTIONS[val]} argument(s), got {len(args)}", pos)
                return Call(val, tuple(args))
            if val not in self.allowed:
                raise UnknownVariable(val, self.allowed)
            return Var(val)
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        self.error("unexpected end of input" if kind == "end" else f"unexpected {val!r}")


def variables_of(node):
    if isinstance(node, Var):
        return frozenset([node.name])
    if isinstance(node, Num):
        return frozenset()
    if isinstance(node, Neg):
        return variables_of(node.operand)
    if isinstance(node, BinOp):
        return variables_of(node.left) | variables_of(node.right)
    return frozenset().union(*(variables_of(a) for a in node.args))


def to_text(node):
    """Print ``node`` so that parsing the result gives back the same tree."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    return f"{node.name}({', '.join(to_text(a) for a in node.args)})"


# ---------------------------------------------------------------------------
# array evaluation


def _pow(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any((x < 0) & (y != np.floor(y))):
        raise DomainError("negative base with non-integer exponent")
    if np.any((x == 0) & (y < 0)):
        raise DomainError("0 raised to a negative power")
    return np.power(x, y)


def _div(x, y):
    if np.any(np.asarray(y) == 0):
        raise DomainError("division by zero")
    return np.true_divide(x, y)


def _log(x):
    if np.any(np.asarray(x) <= 0):
        raise DomainError("log of a non-positive number")
    return np.log(x)


def _sqrt(x):
    if np.any(np.asarray(x) < 0):
        raise DomainError("sqrt of a negative number")
    return np.sqrt(x)


_ARRAY_FUNCS = {
    "exp": np.exp,
    "log": _log,
    "sqrt": _sqrt,
    "abs": np.abs,
    "min": np.minimum,
    "max": np.maximum,
    "pow": _pow,
}


def _eval_array(node, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -_eval_array(node.operand, env)
    if isinstance(node, BinOp):
        a = _eval_array(node.left, env)
        b = _eval_array(node.right, env)
        if node.op == "+":
            return np.add(a, b)
        if node.op == "-":
            return np.subtract(a, b)
        if node.op == "*":
            return np.multiply(a, b)
        if node.op == "/":
            return _div(a, b)
        return _pow(a, b)
    return _ARRAY_FUNCS[node.name](*(_eval_array(a, env) for a in node.args))


# ---------------------------------------------------------------------------
# scalar evaluation through generated Python source (hot loops of the oracle)


def _s_pow(x, y):
    if x < 0 and y != math.floor(y):
        raise DomainError("negative base with non-integer exponent")
    if x == 0 and y < 0:
        raise DomainError("0 raised to a negative power")
    try:
        return math.pow(x, y)
    except OverflowError:
        return math.inf if (x > 0 or y % 2 == 0) else -math.inf


def _s_div(x, y):
    if y == 0:
        raise DomainError("division by zero")
    return x / y


def _s_exp(x):
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _s_log(x):
    if x <= 0:
        raise DomainError("log of a non-positive number")
    return math.log(x)


def _s_sqrt(x):
    if x < 0:
        raise DomainError("sqrt of a negative number")
    return math.sqrt(x)


_SCALAR_NS = {
    "_pow": _s_pow,
    "_div": _s_div,
    "_exp": _s_exp,
    "_log": _s_log,
    "_sqrt": _s_sqrt,
    "_abs": abs,
    "_min": min,
    "_max": max,
    "inf": math.inf,
}


def _source(node):
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{_source(node.operand)})"
    if isinstance(node, BinOp):
        a, b = _source(node.left), _source(node.right)
        if node.op in "+-*":
            return f"({a} {node.op} {b})"
        return f"{'_div' if node.op == '/' else '_pow'}({a}, {b})"
    name = "_pow" if node.name == "pow" else "_" + node.name
    return f"{name}({', '.join(_source(a) for a in node.args)})"


# ---------------------------------------------------------------------------
# signed-log evaluation: (sign, log|value|), immune to exp overflow


def _slog_const(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return np.sign(x), np.log(np.abs(x))


def _slog_value(s, l):
    with np.errstate(over="ignore", invalid="ignore"):
        return np.where(s == 0, 0.0, s * np.exp(l))


def _slog_add(s1, l1, s2, l2):
    s1, l1, s2, l2 = np.broadcast_arrays(s1, l1, s2, l2)
    big = (s2 == 0) | ((s1 != 0) & (l1 >= l2))
    sb, lb = np.where(big, s1, s2), np.where(big, l1, l2)
    ss, ls = np.where(big, s2, s1), np.where(big, l2, l1)
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        d = ls - lb
        same = np.log1p(np.exp(d))
        opposite = np.log(-np.expm1(d))
        corr = np.where(ss == 0, 0.0, np.where(sb == ss, same, opposite))
        l = lb + corr
    if np.any(np.isnan(l) & (ss != 0)):
        raise DomainError("indeterminate difference of overflowing terms")
    s = np.where(np.isneginf(l), 0.0, sb)
    return s, np.where(s == 0, -np.inf, l)


def _slog_gt(s1, l1, s2, l2):
    return (s1 > s2) | ((s1 == s2) & (((s1 > 0) & (l1 > l2)) | ((s1 < 0) & (l1 < l2))))


def _slog_pow(sb, lb, se, le):
    y = _slog_value(se, le)
    if np.any((sb < 0) & (y != np.floor(y))):
        raise DomainError("negative base with non-integer exponent")
    if np.any((sb == 0) & (y < 0)):
        raise DomainError("0 raised to a negative power")
    with np.errstate(invalid="ignore"):
        l = np.where(y == 0, 0.0, np.where(sb == 0, -np.inf, y * lb))
    odd = np.mod(y, 2) == 1
    s = np.where(y == 0, 1.0, np.where(sb == 0, 0.0, np.where((sb < 0) & odd, -1.0, 1.0)))
    return s, l


def _eval_slog(node, env):
    if isinstance(node, Num):
        return _slog_const(node.value)
    if isinstance(node, Var):
        return _slog_const(env[node.name])
    if isinstance(node, Neg):
        s, l = _eval_slog(node.operand, env)
        return -s, l
    if isinstance(node, BinOp):
        s1, l1 = _eval_slog(node.left, env)
        s2, l2 = _eval_slog(node.right, env)
        if node.op == "+":
            return _slog_add(s1, l1, s2, l2)
        if node.op == "-":
            return _slog_add(s1, l1, -s2, l2)
        if node.op == "*":
            s = s1 * s2
            with np.errstate(invalid="ignore"):
                return s, np.where(s == 0, -np.inf, l1 + l2)
        if node.op == "/":
            if np.any(s2 == 0):
                raise DomainError("division by zero")
            s = s1 * s2
            with np.errstate(invalid="ignore"):
                return s, np.where(s == 0, -np.inf, l1 - l2)
        return _slog_pow(s1, l1, s2, l2)
    args = [_eval_slog(a, env) for a in node.args]
    name = node.name
    if name == "exp":
        v = _slog_value(*args[0])
        return np.ones_like(v), v
    if name == "log":
        s, l = args[0]
        if np.any(s <= 0):
            raise DomainError("log of a non-positive number")
        return _slog_const(l)
    if name == "sqrt":
        s, l = args[0]
        if np.any(s < 0):
            raise DomainError("sqrt of a negative number")
        return s, l / 2
    if name == "abs":
        s, l = args[0]
        return np.abs(s), l
    if name == "pow":
        return _slog_pow(*args[0], *args[1])
    (s1, l1), (s2, l2) = args
    first = _slog_gt(s1, l1, s2, l2)
    if name == "min":
        first = ~first
    return np.where(first, s1, s2), np.where(first, l1, l2)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Expr:
    """A parsed expression: the tree plus the variable set it was checked against."""

    root: Node
    allowed: frozenset
    text: str = field(default="", compare=False)

    @property
    def variables(self):
        return variables_of(self.root)

    def to_text(self):
        return to_text(self.root)

    def _check(self, bindings):
        missing = self.variables - set(bindings)
        if missing:
            raise ValueError(f"no binding for {', '.join(sorted(missing))}")

    def eval(self, bindings):
        """Evaluate with scalar or array bindings (numpy broadcasting applies)."""
        self._check(bindings)
        with np.errstate(over="ignore"):
            out = _eval_array(self.root, bindings)
        if np.ndim(out) == 0:
            return float(out)
        return np.asarray(out, dtype=float)

    def eval_log(self, bindings):
        """Return ``(sign, log|value|)`` arrays; stays finite where ``eval`` overflows."""
        self._check(bindings)
        s, l = _eval_slog(self.root, bindings)
        return np.asarray(s, dtype=float), np.asarray(l, dtype=float)

    def scalar_function(self, *names):
        """Compile to a plain-float function of the positional ``names``."""
        src = f"lambda {', '.join(names) or '*_'}: {_source(self.root)}"
        return eval(compile(src, "<expr>", "eval"), dict(_SCALAR_NS))  # noqa: S307

    def is_zero(self):
        return isinstance(self.root, Num) and self.root.value == 0.0

    def __str__(self):
        return self.text or self.to_text()


def parse(text, allowed_vars):
    """Parse ``text`` into an :class:`Expr` whose variables are within ``allowed_vars``."""
    if not text or not text.strip():
        raise ExprSyntaxError(0, "empty expression", text or "")
    allowed = frozenset(allowed_vars)
    root = _Parser(text, allowed).parse()
    return Expr(root, allowed, text)


def evaluate(expr, bindings):
    return expr.eval(bindings)


# ---------------------------------------------------------------------------
# sampled audits of the standing hypotheses on a_j, h_j, f_j


@dataclass(frozen=True)
class SampleSpec:
    ray_max: float = 100.0
    ray_points: int = 201
    lattice_max: float = 10.0
    lattice_points: int = 33


@dataclass(frozen=True)
class Violation:
    point: dict
    value: float
    detail: str


PROPERTY_KINDS = ("nonneg_on_ray", "nondecreasing_each_var", "positive_when_positive")


def _lattice(expr, sample_spec):
    names = sorted(expr.allowed)
    if names == ["r"]:
        axes = [np.linspace(0.0, sample_spec.ray_max, sample_spec.ray_points)]
    else:
        axes = [np.linspace(0.0, sample_spec.lattice_max, sample_spec.lattice_points)] * len(names)
    grids = np.meshgrid(*axes, indexing="ij")
    env = dict(zip(names, grids))
    values = np.broadcast_to(np.asarray(expr.eval(env), dtype=float), grids[0].shape)
    return names, grids, values


def check_sampled_properties(expr, kind, sample_spec=SampleSpec()):
    """List lattice points violating ``kind``; an empty list is not a proof."""
    if kind not in PROPERTY_KINDS:
        raise ValueError(f"unknown property kind {kind!r}")
    names, grids, values = _lattice(expr, sample_spec)

    def at(idx):
        return {n: float(g[idx]) for n, g in zip(names, grids)}

    out = []
    if kind == "nonneg_on_ray":
        for idx in zip(*np.nonzero(values < 0)):
            out.append(Violation(at(idx), float(values[idx]), "negative value"))
    elif kind == "positive_when_positive":
        positive = np.zeros(values.shape, dtype=bool)
        for g in grids:
            positive |= g > 0
        for idx in zip(*np.nonzero(positive & ~(values > 0))):
            out.append(Violation(at(idx), float(values[idx]), "not positive at a positive argument"))
    else:
        scale = np.maximum(1.0, np.abs(values))
        for axis, name in enumerate(names):
            drop = np.diff(values, axis=axis)
            tol = 1e-12 * np.delete(scale, 0, axis=axis)
            for idx in zip(*np.nonzero(drop < -tol)):
                upper = list(idx)
                upper[axis] += 1
                out.append(Violation(at(tuple(upper)), float(drop[idx]), f"decreases in {name}"))
    return out
