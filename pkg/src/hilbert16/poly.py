"""Sparse bivariate polynomials with float coefficients.

Polynomials are immutable: ``terms`` maps exponent pairs ``(i, j)`` (power
of x, power of y) to nonzero coefficients.  The module also builds the
objects derived from a planar system ``x' = P, y' = Q``: the divergence
``P_x + Q_y`` and the contact pair whose common zeros are the tangencies of
the field with the divergence curve.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Mapping

import numpy as np

from . import interval as iv
from .errors import ExponentOverflow, PolySyntaxError, UnknownIdentifier

#: Degree reported for the zero polynomial.
ZERO_DEGREE = float("-inf")

#: Largest exponent literal accepted by the parser.
MAX_EXPONENT = 64


class Var(Enum):
    X = "x"
    Y = "y"


@dataclass(frozen=True)
class Box2:
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    def __post_init__(self):
        if not (self.x_lo < self.x_hi and self.y_lo < self.y_hi):
            raise ValueError(f"empty box {self}")

    @classmethod
    def square(cls, lo, hi):
        return cls(lo, hi, lo, hi)

    @property
    def width(self):
        return max(self.x_hi - self.x_lo, self.y_hi - self.y_lo)

    def contains(self, x, y):
        return self.x_lo <= x <= self.x_hi and self.y_lo <= y <= self.y_hi


class BivariatePoly:
    """Canonical sparse polynomial sum c_ij x^i y^j."""

    __slots__ = ("_terms", "_dense")

    def __init__(self, terms: Mapping[tuple[int, int], float] | None = None):
        clean = {}
        for (i, j), c in (terms or {}).items():
            if i < 0 or j < 0:
                raise ValueError(f"negative exponent {(i, j)}")
            c = float(c)
            if c != 0.0:
                clean[(int(i), int(j))] = c
        self._terms = MappingProxyType(dict(sorted(clean.items())))
        self._dense = None

    # construction helpers
    @classmethod
    def constant(cls, c):
        return cls({(0, 0): c})

    @classmethod
    def x(cls):
        return cls({(1, 0): 1.0})

    @classmethod
    def y(cls):
        return cls({(0, 1): 1.0})

    @property
    def terms(self) -> Mapping[tuple[int, int], float]:
        return self._terms

    def is_zero(self):
        return not self._terms

    def is_constant(self):
        return all(k == (0, 0) for k in self._terms)

    def degree(self):
        if not self._terms:
            return ZERO_DEGREE
        return max(i + j for i, j in self._terms)

    def __eq__(self, other):
        if isinstance(other, (int, float)):
            other = BivariatePoly.constant(other)
        if not isinstance(other, BivariatePoly):
            return NotImplemented
        return dict(self._terms) == dict(other._terms)

    def __hash__(self):
        return hash(tuple(self._terms.items()))

    def __repr__(self):
        return f"BivariatePoly({to_string(self)!r})"

    def __str__(self):
        return to_string(self)

    # arithmetic
    def _coerce(self, other):
        if isinstance(other, BivariatePoly):
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return BivariatePoly.constant(float(other))
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, 0.0) + c
        return BivariatePoly(out)

    __radd__ = __add__

    def __neg__(self):
        return BivariatePoly({k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        out: dict[tuple[int, int], float] = {}
        for (i1, j1), a in self._terms.items():
            for (i2, j2), b in other._terms.items():
                k = (i1 + i2, j1 + j2)
                out[k] = out.get(k, 0.0) + a * b
        return BivariatePoly(out)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return BivariatePoly({k: v / c for k, v in self._terms.items()})

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = BivariatePoly.constant(1.0)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # evaluation
    def _dense_coeffs(self):
        if self._dense is None:
            if not self._terms:
                dense = np.zeros((1, 1))
            else:
                di = max(i for i, _ in self._terms) + 1
                dj = max(j for _, j in self._terms) + 1
                dense = np.zeros((di, dj))
                for (i, j), c in self._terms.items():
                    dense[i, j] = c
            self._dense = dense
        return self._dense

    def __call__(self, x, y):
        return eval_point(self, x, y)


def eval_point(p: BivariatePoly, x, y):
    """Nested Horner: outer in x over inner Horner polynomials in y.

    Works elementwise on numpy arrays; scalars return a Python float.
    """
    dense = p._dense_coeffs()
    scalar = np.isscalar(x) and np.isscalar(y)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    acc = np.zeros(np.broadcast(x, y).shape)
    for i in range(dense.shape[0] - 1, -1, -1):
        row = dense[i]
        inner = np.zeros_like(acc)
        for j in range(row.shape[0] - 1, -1, -1):
            inner = inner * y + row[j]
        acc = acc * x + inner
    return float(acc) if scalar else acc


def eval_interval_arrays(p: BivariatePoly, xlo, xhi, ylo, yhi):
    """Interval enclosure of ``p`` over many boxes at once (term-wise extension)."""
    xlo = np.asarray(xlo, dtype=float)
    shape = np.broadcast(xlo, xhi, ylo, yhi).shape
    lo = np.zeros(shape)
    hi = np.zeros(shape)
    xpows: dict[int, tuple] = {}
    ypows: dict[int, tuple] = {}
    for (i, j), c in p.terms.items():
        if i not in xpows:
            xpows[i] = iv.ipow((xlo, xhi), i)
        if j not in ypows:
            ypows[j] = iv.ipow((ylo, yhi), j)
        term = iv.iscale(c, iv.imul(xpows[i], ypows[j]))
        lo, hi = iv.iadd((lo, hi), term)
    return np.broadcast_to(lo, shape), np.broadcast_to(hi, shape)


def eval_interval(p: BivariatePoly, b: Box2) -> iv.Interval:
    lo, hi = eval_interval_arrays(p, b.x_lo, b.x_hi, b.y_lo, b.y_hi)
    return iv.Interval(float(lo), float(hi))


def differentiate(p: BivariatePoly, var: Var | str) -> BivariatePoly:
    var = Var(var) if isinstance(var, str) else var
    out = {}
    for (i, j), c in p.terms.items():
        if var is Var.X and i > 0:
            out[(i - 1, j)] = c * i
        elif var is Var.Y and j > 0:
            out[(i, j - 1)] = c * j
    return BivariatePoly(out)


def taylor_terms(p: BivariatePoly) -> list[tuple[int, int, BivariatePoly]]:
    """(a, b, D_x^a D_y^b p / (a! b!)) for every nonzero term with a + b >= 1."""
    out = []
    deg = int(max(p.degree(), 0))
    da = p
    for a in range(deg + 1):
        db = da
        for b in range(deg + 1 - a):
            if (a or b) and not db.is_zero():
                out.append((a, b, db / float(math.factorial(a) * math.factorial(b))))
            db = differentiate(db, Var.Y)
        da = differentiate(da, Var.X)
    return out


def eval_increment(terms, x, y, dx, dy):
    """p(x + dx, y + dy) - p(x, y) from ``taylor_terms(p)``, exact in exact arithmetic.

    Accurate to the size of the increment itself, unlike a difference of two
    evaluations.
    """
    acc = np.zeros(np.broadcast(x, y, dx, dy).shape)
    for a, b, q in terms:
        acc = acc + eval_point(q, x, y) * dx**a * dy**b
    return acc


def compile_scalar(p: BivariatePoly):
    """Return a fast ``f(x, y) -> float`` for scalar use inside integrator loops."""
    dense = p._dense_coeffs()
    rows = []
    for i in range(dense.shape[0]):
        coeffs = [repr(float(c)) for c in dense[i]]
        expr = coeffs[-1]
        for c in reversed(coeffs[:-1]):
            expr = f"({expr})*y+{c}"
        rows.append(expr)
    expr = rows[-1]
    for r in reversed(rows[:-1]):
        expr = f"({expr})*x+({r})"
    return eval(f"lambda x, y: {expr}", {})


# -- planar systems -----------------------------------------------------------


@dataclass(frozen=True)
class PlanarSystem:
    """x' = P(x, y), y' = Q(x, y)."""

    P: BivariatePoly
    Q: BivariatePoly
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.P.is_zero() and self.Q.is_zero():
            raise ValueError("P and Q are both zero")

    @property
    def n(self) -> int:
        return int(max(self.P.degree(), self.Q.degree(), 0))

    @classmethod
    def from_strings(cls, P: str, Q: str, name=None):
        return cls(parse_poly(P), parse_poly(Q), name)

    def field_at(self, x, y):
        return eval_point(self.P, x, y), eval_point(self.Q, x, y)


def divergence(sys: PlanarSystem) -> BivariatePoly:
    return differentiate(sys.P, Var.X) + differentiate(sys.Q, Var.Y)


def contact_system(sys: PlanarSystem) -> tuple[BivariatePoly, BivariatePoly]:
    """(P (P_xx + Q_yx) + Q (P_xy + Q_yy), Div), i.e. (F . grad Div, Div)."""
    div = divergence(sys)
    first = sys.P * differentiate(div, Var.X) + sys.Q * differentiate(div, Var.Y)
    return first, div


def perturb(sys: PlanarSystem, delta: float, seed: int) -> PlanarSystem:
    """Add independent U[-delta, delta] noise to every monomial of degree <= n.

    All monomials are perturbed, not only the stored ones, so that structural
    zeros (a vanishing divergence, say) are broken as well.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    n = sys.n
    rng = np.random.default_rng(seed)
    monomials = [(i, d - i) for d in range(n + 1) for i in range(d, -1, -1)]
    noise = rng.uniform(-delta, delta, size=(2, len(monomials)))
    if delta == 0:
        return sys
    P = sys.P + BivariatePoly(dict(zip(monomials, noise[0])))
    Q = sys.Q + BivariatePoly(dict(zip(monomials, noise[1])))
    return PlanarSystem(P, Q, sys.name)


# -- printing -----------------------------------------------------------------


def _monomial(i, j):
    parts = []
    if i:
        parts.append("x" if i == 1 else f"x^{i}")
    if j:
        parts.append("y" if j == 1 else f"y^{j}")
    return "*".join(parts)


def to_string(p: BivariatePoly) -> str:
    """Grammar-conformant text; ``parse_poly(to_string(p)) == p`` exactly."""
    if p.is_zero():
        return "0"
    items = sorted(p.terms.items(), key=lambda kv: (-(kv[0][0] + kv[0][1]), -kv[0][0]))
    out = []
    for idx, ((i, j), c) in enumerate(items):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        mono = _monomial(i, j)
        if not mono:
            body = repr(mag)
        elif mag == 1.0:
            body = mono
        else:
            body = f"{mag!r}*{mono}"
        if idx == 0:
            out.append(body if sign == "+" else f"-{body}")
        else:
            out.append(f" {sign} {body}")
    return "".join(out)


# -- parsing ------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = []
        pos = 0
        n = len(text)
        while pos < n:
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m:
                bad = len(text) - len(text[pos:].lstrip())
                raise PolySyntaxError(f"unexpected character {text[bad]!r}", bad)
            start = m.start(m.lastgroup)
            self.tokens.append((m.lastgroup, m.group(m.lastgroup), start))
            pos = m.end()
        self.tokens.append(("end", "", len(text)))
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, val, off = self.take()
        if kind != "op" or val != op:
            raise PolySyntaxError(f"expected {op!r}, got {val or 'end of input'!r}", off)

    def parse(self):
        if self.peek()[0] == "end":
            raise PolySyntaxError("empty expression", 0)
        p = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise PolySyntaxError(f"unexpected token {val!r}", off)
        return p

    def expr(self):
        # leading sign is accepted so that printed negatives reparse
        sign = 1.0
        kind, val, _ = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            sign = -1.0 if val == "-" else 1.0
        acc = self.term() * sign
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                t = self.term()
                acc = acc + t if val == "+" else acc - t
            else:
                return acc

    def term(self):
        acc = self.factor()
        while True:
            kind, val, off = self.peek()
            if kind == "op" and val == "*":
                self.take()
                acc = acc * self.factor()
            elif kind == "op" and val == "/":
                self.take()
                k2, v2, o2 = self.take()
                if k2 != "num":
                    raise PolySyntaxError("division only by a number literal", o2)
                d = float(v2)
                if d == 0.0:
                    raise PolySyntaxError("division by zero", o2)
                acc = acc / d
            else:
                kind, val, off = self.peek()
                if kind in ("num", "id") or (kind == "op" and val == "("):
                    raise PolySyntaxError("implicit multiplication is not allowed", off)
                return acc

    def factor(self):
        base = self.base()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            k2, v2, o2 = self.take()
            if k2 != "num" or not v2.isdigit():
                raise PolySyntaxError("exponent must be an unsigned integer", o2)
            e = int(v2)
            if e > MAX_EXPONENT:
                raise ExponentOverflow(f"exponent {e} exceeds {MAX_EXPONENT}", o2)
            return base**e
        return base

    def base(self):
        kind, val, off = self.take()
        if kind == "num":
            c = float(val)
            if not math.isfinite(c):
                raise PolySyntaxError("non-finite literal", off)
            return BivariatePoly.constant(c)
        if kind == "id":
            if val == "x":
                return BivariatePoly.x()
            if val == "y":
                return BivariatePoly.y()
            raise UnknownIdentifier(f"unknown identifier {val!r}", off)
        if kind == "op" and val == "(":
            p = self.expr()
            self.expect_op(")")
            return p
        raise PolySyntaxError(f"unexpected {val or 'end of input'!r}", off)


def parse_poly(text: str) -> BivariatePoly:
    """Parse the polynomial grammar (``x``, ``y``, numbers, ``+ - * / ^``, parentheses).

    >>> parse_poly("2*x*y^2 + x").terms
    mappingproxy({(1, 0): 1.0, (1, 2): 2.0})
    """
    return _Parser(text).parse()
