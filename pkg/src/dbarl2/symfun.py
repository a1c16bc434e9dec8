"""Symbolic cylinder functions of finitely many real coordinates x_i, y_i.

A small expression language with exact symbolic partial derivatives.  It
carries everything the operator layer needs: Wirtinger derivatives, the
Gaussian-adjoint building block delta_i = del_i - zb_i/(2 a_i^2), the weighted
variant sigma_i, and full symbolic conjugation.  Evaluation is vectorized:
points are float arrays of shape (N, 2n) with columns x1, y1, x2, y2, ...

Compactly supported smooth germs are first-class nodes so that their
derivatives stay exact:

  * bump(t)   = exp(-1/(1-t^2)) on (-1, 1), 0 outside,
  * the cubic cut-off step used for the level-k truncations,
  * the C-infinity step germ (exp(1/(x-1)) - 1) * exp(-exp(1/(x-1))/x) + 1,
  * truncated power series (for weights built from series majorants).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Union

import numpy as np
from numpy.polynomial import polynomial as npoly


class EvalError(ArithmeticError):
    """Raised on division by zero, log of a nonpositive real, and kin."""


class ParseError(ValueError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} (at position {pos})")
        self.pos = pos


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Expr:
    def __add__(self, other):
        return add(self, _as_expr(other))

    def __radd__(self, other):
        return add(_as_expr(other), self)

    def __sub__(self, other):
        return add(self, mul(const(-1), _as_expr(other)))

    def __rsub__(self, other):
        return add(_as_expr(other), mul(const(-1), self))

    def __mul__(self, other):
        return mul(self, _as_expr(other))

    def __rmul__(self, other):
        return mul(_as_expr(other), self)

    def __truediv__(self, other):
        return div(self, _as_expr(other))

    def __rtruediv__(self, other):
        return div(_as_expr(other), self)

    def __pow__(self, k: int):
        return pw(self, k)

    def __neg__(self):
        return mul(const(-1), self)


@dataclass(frozen=True)
class Const(Expr):
    val: complex


@dataclass(frozen=True)
class VarX(Expr):
    i: int


@dataclass(frozen=True)
class VarY(Expr):
    i: int


@dataclass(frozen=True)
class Add(Expr):
    terms: tuple


@dataclass(frozen=True)
class Mul(Expr):
    factors: tuple


@dataclass(frozen=True)
class Div(Expr):
    num: Expr
    den: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    k: int


@dataclass(frozen=True)
class Fun(Expr):
    name: str  # exp | log | sin | cos
    arg: Expr


@dataclass(frozen=True)
class BumpD(Expr):
    """k-th derivative of the bump germ, as a single exact primitive."""
    arg: Expr
    k: int


@dataclass(frozen=True)
class CubicStepD(Expr):
    """order-th derivative of the cubic step h_level (1 below level, 0 above level+1)."""
    arg: Expr
    level: float
    order: int


@dataclass(frozen=True)
class GermStepD(Expr):
    """k-th derivative of the smooth step germ (1 for x<=0, 0 for x>=1)."""
    arg: Expr
    k: int


@dataclass(frozen=True)
class Poly1(Expr):
    """Polynomial in one subexpression, ascending coefficients."""
    arg: Expr
    coeffs: tuple


@dataclass(frozen=True)
class Conj(Expr):
    arg: Expr


ZERO = Const(0.0)
ONE = Const(1.0)


def _as_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, float, complex)):
        return Const(complex(v))
    raise TypeError(f"cannot coerce {type(v)} to Expr")


def const(v) -> Const:
    return Const(complex(v))


def x(i: int) -> VarX:
    if i < 1:
        raise ValueError("variable index must be >= 1")
    return VarX(i)


def y(i: int) -> VarY:
    if i < 1:
        raise ValueError("variable index must be >= 1")
    return VarY(i)


def z(i: int) -> Expr:
    return add(x(i), mul(const(1j), y(i)))


def zb(i: int) -> Expr:
    return add(x(i), mul(const(-1j), y(i)))


def _is_const(e: Expr, v=None) -> bool:
    return isinstance(e, Const) and (v is None or e.val == v)


def add(*terms) -> Expr:
    flat = []
    cval = 0.0 + 0.0j
    for t in terms:
        t = _as_expr(t)
        if isinstance(t, Add):
            flat.extend(t.terms)
        else:
            flat.append(t)
    out = []
    for t in flat:
        if isinstance(t, Const):
            cval += t.val
        else:
            out.append(t)
    if cval != 0:
        out.append(Const(cval))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return Add(tuple(out))


def mul(*factors) -> Expr:
    flat = []
    cval = 1.0 + 0.0j
    for f in factors:
        f = _as_expr(f)
        if isinstance(f, Mul):
            flat.extend(f.factors)
        else:
            flat.append(f)
    out = []
    for f in flat:
        if isinstance(f, Const):
            cval *= f.val
        else:
            out.append(f)
    if cval == 0:
        return ZERO
    if cval != 1:
        out.insert(0, Const(cval))
    if not out:
        return ONE
    if len(out) == 1:
        return out[0]
    return Mul(tuple(out))


def div(a, b) -> Expr:
    a, b = _as_expr(a), _as_expr(b)
    if _is_const(b):
        if b.val == 0:
            raise ZeroDivisionError("division by constant zero")
        return mul(Const(1.0 / b.val), a)
    if _is_const(a, 0):
        return ZERO
    return Div(a, b)


def pw(base, k: int) -> Expr:
    base = _as_expr(base)
    k = int(k)
    if k == 0:
        return ONE
    if k == 1:
        return base
    if isinstance(base, Const):
        return Const(base.val ** k)
    if k < 0:
        return Div(ONE, Pow(base, -k))
    return Pow(base, k)


def _fun(name: str, arg) -> Expr:
    arg = _as_expr(arg)
    if isinstance(arg, Const):
        v = arg.val
        if name == "exp":
            return Const(complex(np.exp(v)))
        if name == "log":
            if v.imag == 0 and v.real <= 0:
                raise EvalError("log of nonpositive real constant")
            return Const(complex(np.log(v)))
        if name == "sin":
            return Const(complex(np.sin(v)))
        if name == "cos":
            return Const(complex(np.cos(v)))
    return Fun(name, arg)


def exp_(arg) -> Expr:
    return _fun("exp", arg)


def log_(arg) -> Expr:
    return _fun("log", arg)


def sin_(arg) -> Expr:
    return _fun("sin", arg)


def cos_(arg) -> Expr:
    return _fun("cos", arg)


def bump(arg) -> Expr:
    """exp(-1/(1-t^2)) inside (-1,1), 0 outside; smooth and compactly supported."""
    return BumpD(_as_expr(arg), 0)


def cubic_step(arg, level: float) -> Expr:
    """The C^1 cut-off: 1 below `level`, cubic descent on [level, level+1], then 0."""
    return CubicStepD(_as_expr(arg), float(level), 0)


def germ_step(arg) -> Expr:
    """The C-infinity step: 1 for t <= 0, smooth descent on (0,1), 0 for t >= 1."""
    return GermStepD(_as_expr(arg), 0)


def poly1(arg, coeffs) -> Expr:
    cs = tuple(complex(c) for c in coeffs)
    while len(cs) > 1 and cs[-1] == 0:
        cs = cs[:-1]
    if len(cs) == 1:
        return Const(cs[0])
    return Poly1(_as_expr(arg), cs)


def conj_(arg) -> Expr:
    arg = _as_expr(arg)
    if isinstance(arg, Const):
        return Const(arg.val.conjugate())
    if isinstance(arg, Conj):
        return arg.arg
    if isinstance(arg, (VarX, VarY)):
        return arg
    return Conj(arg)


# ---------------------------------------------------------------------------
# Differentiation
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _bump_numer(k: int) -> tuple:
    """Numerator polynomial of the k-th bump derivative over (1-t^2)^(2k)."""
    if k == 0:
        return (1.0,)
    N = np.asarray(_bump_numer(k - 1), dtype=float)
    one_m_t2 = np.array([1.0, 0.0, -1.0])
    kk = k - 1
    Nd = npoly.polyder(N) if len(N) > 1 else np.array([0.0])
    inner = npoly.polyadd(npoly.polymul(Nd, one_m_t2),
                          npoly.polymul(np.array([0.0, 4.0 * kk]), N))
    out = npoly.polysub(npoly.polymul(inner, one_m_t2),
                        npoly.polymul(np.array([0.0, 2.0]), N))
    return tuple(out)


_CUBIC_BASE = (1.0, 0.0, -3.0, 2.0)  # (tau-1)^2 (2 tau + 1) with tau = t - level


@lru_cache(maxsize=16)
def _cubic_poly(order: int) -> tuple:
    p = np.asarray(_CUBIC_BASE, dtype=float)
    for _ in range(order):
        p = npoly.polyder(p) if len(p) > 1 else np.array([0.0])
    return tuple(p)


_GERM_TEMPLATES: list = []


def _germ_template(k: int) -> Expr:
    """k-th derivative of the open-interval germ formula, in the variable x(1)."""
    if not _GERM_TEMPLATES:
        t = VarX(1)
        e_inner = exp_(div(ONE, add(t, const(-1))))
        formula = add(mul(add(e_inner, const(-1)),
                          exp_(mul(const(-1), div(e_inner, t)))),
                      ONE)
        _GERM_TEMPLATES.append(formula)
    while len(_GERM_TEMPLATES) <= k:
        _GERM_TEMPLATES.append(diff(_GERM_TEMPLATES[-1], "x", 1))
    return _GERM_TEMPLATES[k]


def diff(e: Expr, kind: str, i: int) -> Expr:
    """Exact symbolic partial derivative with respect to x_i or y_i."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, VarX):
        return ONE if (kind == "x" and e.i == i) else ZERO
    if isinstance(e, VarY):
        return ONE if (kind == "y" and e.i == i) else ZERO
    if isinstance(e, Add):
        return add(*(diff(t, kind, i) for t in e.terms))
    if isinstance(e, Mul):
        terms = []
        fs = e.factors
        for j in range(len(fs)):
            dj = diff(fs[j], kind, i)
            if _is_const(dj, 0):
                continue
            terms.append(mul(*fs[:j], dj, *fs[j + 1:]))
        return add(*terms) if terms else ZERO
    if isinstance(e, Div):
        da, db = diff(e.num, kind, i), diff(e.den, kind, i)
        return div(add(mul(da, e.den), mul(const(-1), e.num, db)), pw(e.den, 2))
    if isinstance(e, Pow):
        return mul(const(e.k), pw(e.base, e.k - 1), diff(e.base, kind, i))
    if isinstance(e, Fun):
        d = diff(e.arg, kind, i)
        if e.name == "exp":
            return mul(e, d)
        if e.name == "log":
            return div(d, e.arg)
        if e.name == "sin":
            return mul(_fun("cos", e.arg), d)
        if e.name == "cos":
            return mul(const(-1), _fun("sin", e.arg), d)
        raise ValueError(f"unknown function {e.name}")
    if isinstance(e, BumpD):
        return mul(BumpD(e.arg, e.k + 1), diff(e.arg, kind, i))
    if isinstance(e, CubicStepD):
        return mul(CubicStepD(e.arg, e.level, e.order + 1), diff(e.arg, kind, i))
    if isinstance(e, GermStepD):
        return mul(GermStepD(e.arg, e.k + 1), diff(e.arg, kind, i))
    if isinstance(e, Poly1):
        if len(e.coeffs) <= 1:
            return ZERO
        dcs = tuple(npoly.polyder(np.asarray(e.coeffs)))
        return mul(poly1(e.arg, dcs), diff(e.arg, kind, i))
    if isinstance(e, Conj):
        return conj_(diff(e.arg, kind, i))
    raise TypeError(f"cannot differentiate {type(e)}")


def max_index(e: Expr) -> int:
    """Largest variable index appearing in the expression (0 for constants)."""
    memo: dict = {}

    def rec(n) -> int:
        key = id(n)
        if key in memo:
            return memo[key]
        if isinstance(n, (VarX, VarY)):
            v = n.i
        elif isinstance(n, Const):
            v = 0
        elif isinstance(n, Add):
            v = max(rec(t) for t in n.terms)
        elif isinstance(n, Mul):
            v = max(rec(t) for t in n.factors)
        elif isinstance(n, Div):
            v = max(rec(n.num), rec(n.den))
        elif isinstance(n, Pow):
            v = rec(n.base)
        elif isinstance(n, (Fun, BumpD, CubicStepD, GermStepD, Poly1, Conj)):
            v = rec(n.arg)
        else:
            raise TypeError(type(n))
        memo[key] = v
        return v

    return rec(e)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

_REAL_TOL = 1e-9
_EDGE = 1e-6      # bump: treat 1-t^2 <= _EDGE as outside (value < exp(-1e6) ~ 0)
_GERM_CUT = 1e-8  # germ: evaluation window (cut, 1-cut); tails are constants


def _require_real(v, what: str):
    v = np.asarray(v)
    if np.iscomplexobj(v):
        scale = np.max(np.abs(v)) if v.size else 0.0
        if np.max(np.abs(v.imag)) > _REAL_TOL * max(1.0, scale):
            raise EvalError(f"{what} of a non-real argument")
        return v.real
    return v


def eval_expr(e: Expr, pts: np.ndarray, memo: Optional[dict] = None):
    """Evaluate on points of shape (N, 2n); returns scalar or (N,) array."""
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if memo is None:
        memo = {}

    ncols = pts.shape[1]

    def rec(n):
        key = id(n)
        if key in memo:
            return memo[key]
        if isinstance(n, Const):
            v = n.val
        elif isinstance(n, VarX):
            col = 2 * (n.i - 1)
            if col >= ncols:
                raise EvalError(f"point has no coordinate x_{n.i}")
            v = pts[:, col]
        elif isinstance(n, VarY):
            col = 2 * (n.i - 1) + 1
            if col >= ncols:
                raise EvalError(f"point has no coordinate y_{n.i}")
            v = pts[:, col]
        elif isinstance(n, Add):
            v = rec(n.terms[0])
            for t in n.terms[1:]:
                v = v + rec(t)
        elif isinstance(n, Mul):
            v = rec(n.factors[0])
            for t in n.factors[1:]:
                v = v * rec(t)
        elif isinstance(n, Div):
            den = rec(n.den)
            if np.any(den == 0):
                raise EvalError("division by zero")
            v = rec(n.num) / den
        elif isinstance(n, Pow):
            v = rec(n.base) ** n.k
        elif isinstance(n, Fun):
            a = rec(n.arg)
            if n.name == "exp":
                v = np.exp(a)
            elif n.name == "log":
                aa = np.asarray(a)
                if np.iscomplexobj(aa):
                    bad = (aa.imag == 0) & (aa.real <= 0)
                else:
                    bad = aa <= 0
                if np.any(bad):
                    raise EvalError("log of nonpositive real")
                v = np.log(aa)
            elif n.name == "sin":
                v = np.sin(a)
            elif n.name == "cos":
                v = np.cos(a)
            else:
                raise ValueError(n.name)
        elif isinstance(n, BumpD):
            t = np.atleast_1d(_require_real(rec(n.arg), "bump"))
            om = 1.0 - t * t
            inside = om > _EDGE
            out = np.zeros(np.broadcast_shapes(t.shape, (1,)), dtype=float)
            if np.any(inside):
                ti = t[inside] if t.shape else t
                omi = om[inside]
                val = np.exp(-1.0 / omi)
                if n.k > 0:
                    val = val * npoly.polyval(ti, np.asarray(_bump_numer(n.k))) / omi ** (2 * n.k)
                out[inside] = val
            v = out if out.shape != () else float(out)
        elif isinstance(n, CubicStepD):
            t = np.atleast_1d(_require_real(rec(n.arg), "cubic step"))
            tau = t - n.level
            out = np.zeros(tau.shape, dtype=float)
            if n.order == 0:
                out[tau < 0.0] = 1.0
            mid = (tau >= 0.0) & (tau <= 1.0)
            if np.any(mid):
                out[mid] = npoly.polyval(tau[mid], np.asarray(_cubic_poly(n.order)))
            v = out
        elif isinstance(n, GermStepD):
            t = np.atleast_1d(_require_real(rec(n.arg), "smooth step"))
            out = np.zeros(t.shape, dtype=float)
            if n.k == 0:
                out[t <= _GERM_CUT] = 1.0
            mid = (t > _GERM_CUT) & (t < 1.0 - _GERM_CUT)
            if np.any(mid):
                sub = np.zeros((int(mid.sum()), 2))
                sub[:, 0] = t[mid]
                val = eval_expr(_germ_template(n.k), sub, None)
                out[mid] = np.real(val)
            v = out
        elif isinstance(n, Poly1):
            a = rec(n.arg)
            v = npoly.polyval(np.asarray(a, dtype=complex), np.asarray(n.coeffs))
        elif isinstance(n, Conj):
            v = np.conjugate(rec(n.arg))
        else:
            raise TypeError(type(n))
        memo[key] = v
        return v

    out = rec(e)
    out = np.asarray(out)
    if out.ndim == 0:
        out = np.broadcast_to(out, (pts.shape[0],))
    return np.asarray(out, dtype=complex)


# ---------------------------------------------------------------------------
# Parser (exact grammar; z(i)/zb(i) are sugar over x, y)
# ---------------------------------------------------------------------------

_FUNCS = {"exp", "log", "sin", "cos", "bump", "conj"}


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        self.skip_ws()
        if self.peek() != ch:
            raise ParseError(f"expected {ch!r}", self.pos)
        self.pos += 1

    def ident(self) -> str:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isalpha():
            self.pos += 1
        return self.text[start:self.pos]

    def integer(self) -> int:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            raise ParseError("expected an integer", self.pos)
        return int(self.text[start:self.pos])

    def number(self) -> float:
        self.skip_ws()
        start = self.pos
        t = self.text
        while self.pos < len(t) and (t[self.pos].isdigit() or t[self.pos] == "."):
            self.pos += 1
        if self.pos < len(t) and t[self.pos] in "eE":
            save = self.pos
            self.pos += 1
            if self.pos < len(t) and t[self.pos] in "+-":
                self.pos += 1
            if self.pos < len(t) and t[self.pos].isdigit():
                while self.pos < len(t) and t[self.pos].isdigit():
                    self.pos += 1
            else:
                self.pos = save
        try:
            return float(t[start:self.pos])
        except ValueError:
            raise ParseError("bad number literal", start) from None


def parse(text: str) -> Expr:
    """Parse an expression string; `z(i)` expands to x(i)+i*y(i), `zb(i)` to the conjugate."""
    tk = _Tokens(text)
    e = _parse_expr(tk)
    tk.skip_ws()
    if tk.pos != len(text):
        raise ParseError("unexpected trailing input", tk.pos)
    return e


def _parse_expr(tk: _Tokens) -> Expr:
    sign = 1
    if tk.peek() in ("+", "-"):
        if tk.peek() == "-":
            sign = -1
        tk.pos += 1
    e = _parse_term(tk)
    if sign < 0:
        e = mul(const(-1), e)
    while tk.peek() in ("+", "-"):
        op = tk.peek()
        tk.pos += 1
        rhs = _parse_term(tk)
        e = add(e, rhs if op == "+" else mul(const(-1), rhs))
    return e


def _parse_term(tk: _Tokens) -> Expr:
    e = _parse_factor(tk)
    while tk.peek() in ("*", "/"):
        op = tk.peek()
        tk.pos += 1
        rhs = _parse_factor(tk)
        e = mul(e, rhs) if op == "*" else div(e, rhs)
    return e


def _parse_factor(tk: _Tokens) -> Expr:
    e = _parse_atom(tk)
    if tk.peek() == "^":
        tk.pos += 1
        neg = False
        if tk.peek() == "-":
            neg = True
            tk.pos += 1
        k = tk.integer()
        e = pw(e, -k if neg else k)
    return e


def _parse_indexed(tk: _Tokens, builder):
    tk.expect("(")
    i = tk.integer()
    if i < 1:
        raise ParseError("index must be >= 1", tk.pos)
    tk.expect(")")
    return builder(i)


def _parse_atom(tk: _Tokens) -> Expr:
    c = tk.peek()
    if c == "(":
        tk.pos += 1
        e = _parse_expr(tk)
        tk.expect(")")
        return e
    if c.isdigit() or c == ".":
        return const(tk.number())
    if c.isalpha():
        name = tk.ident()
        if name == "i":
            return const(1j)
        if name == "x":
            return _parse_indexed(tk, x)
        if name == "y":
            return _parse_indexed(tk, y)
        if name == "z":
            return _parse_indexed(tk, z)
        if name == "zb":
            return _parse_indexed(tk, zb)
        if name in _FUNCS:
            tk.expect("(")
            arg = _parse_expr(tk)
            tk.expect(")")
            if name == "bump":
                return bump(arg)
            if name == "conj":
                return conj_(arg)
            return _fun(name, arg)
        raise ParseError(f"unknown identifier {name!r}", tk.pos)
    raise ParseError("expected an atom", tk.pos)


# ---------------------------------------------------------------------------
# Function layer: cylinder functions plus generic combinators
# ---------------------------------------------------------------------------

def _combine_radius_mul(r1, r2):
    if r1 is None:
        return r2
    if r2 is None:
        return r1
    return min(r1, r2)


def _combine_radius_add(r1, r2):
    if r1 is None or r2 is None:
        return None
    return max(r1, r2)


class FnBase:
    """Common protocol: callable on (N, 2n) points; exact partials; algebra."""

    dim: int
    support_radius: Optional[float]

    def __call__(self, pts) -> np.ndarray:
        raise NotImplementedError

    def d_dx(self, i: int) -> "FnBase":
        raise NotImplementedError

    def d_dy(self, i: int) -> "FnBase":
        raise NotImplementedError

    def conj(self) -> "FnBase":
        return FnConj(self)

    def __add__(self, other):
        return FnSum((self, _as_fn(other)))

    def __radd__(self, other):
        return FnSum((_as_fn(other), self))

    def __sub__(self, other):
        return FnSum((self, FnScale(-1.0, _as_fn(other))))

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            return FnScale(complex(other), self)
        return FnProd(self, _as_fn(other))

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex)):
            return FnScale(complex(other), self)
        return FnProd(_as_fn(other), self)

    def __neg__(self):
        return FnScale(-1.0, self)


def _as_fn(v) -> FnBase:
    if isinstance(v, FnBase):
        return v
    if isinstance(v, Expr):
        return CylinderFn(v)
    if isinstance(v, str):
        return CylinderFn(parse(v))
    if isinstance(v, (int, float, complex)):
        return CylinderFn(const(v))
    raise TypeError(f"cannot coerce {type(v)} to a function")


class CylinderFn(FnBase):
    """Symbolic cylinder function: an Expr with a dimension and support radius."""

    def __init__(self, expr: Union[Expr, str], support_radius: Optional[float] = None,
                 dim: Optional[int] = None):
        if isinstance(expr, str):
            expr = parse(expr)
        self.expr = expr
        d = max_index(expr)
        self.dim = d if dim is None else max(int(dim), d)
        self.support_radius = support_radius

    def __call__(self, pts) -> np.ndarray:
        return eval_expr(self.expr, pts)

    def d_dx(self, i: int) -> "CylinderFn":
        return CylinderFn(diff(self.expr, "x", i), self.support_radius, self.dim)

    def d_dy(self, i: int) -> "CylinderFn":
        return CylinderFn(diff(self.expr, "y", i), self.support_radius, self.dim)

    def conj(self) -> "CylinderFn":
        return CylinderFn(conj_(self.expr), self.support_radius, self.dim)

    def __add__(self, other):
        if isinstance(other, (int, float, complex, Expr, str)):
            other = _as_fn(other)
        if isinstance(other, CylinderFn):
            return CylinderFn(add(self.expr, other.expr),
                              _combine_radius_add(self.support_radius, other.support_radius),
                              max(self.dim, other.dim))
        return super().__add__(other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, float, complex, Expr, str)):
            other = _as_fn(other)
        if isinstance(other, CylinderFn):
            return self + (-1.0) * other
        return super().__sub__(other)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            return CylinderFn(mul(const(other), self.expr), self.support_radius, self.dim)
        if isinstance(other, (Expr, str)):
            other = _as_fn(other)
        if isinstance(other, CylinderFn):
            return CylinderFn(mul(self.expr, other.expr),
                              _combine_radius_mul(self.support_radius, other.support_radius),
                              max(self.dim, other.dim))
        return super().__mul__(other)

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def is_zero(self) -> bool:
        return _is_const(self.expr, 0)


class FnSum(FnBase):
    def __init__(self, fns):
        self.fns = tuple(fns)
        self.dim = max(f.dim for f in self.fns)
        r = self.fns[0].support_radius
        for f in self.fns[1:]:
            r = _combine_radius_add(r, f.support_radius)
        self.support_radius = r

    def __call__(self, pts):
        out = self.fns[0](pts)
        for f in self.fns[1:]:
            out = out + f(pts)
        return out

    def d_dx(self, i):
        return FnSum(tuple(f.d_dx(i) for f in self.fns))

    def d_dy(self, i):
        return FnSum(tuple(f.d_dy(i) for f in self.fns))

    def conj(self):
        return FnSum(tuple(f.conj() for f in self.fns))


class FnProd(FnBase):
    def __init__(self, a: FnBase, b: FnBase):
        self.a, self.b = a, b
        self.dim = max(a.dim, b.dim)
        self.support_radius = _combine_radius_mul(a.support_radius, b.support_radius)

    def __call__(self, pts):
        return self.a(pts) * self.b(pts)

    def d_dx(self, i):
        return FnSum((FnProd(self.a.d_dx(i), self.b), FnProd(self.a, self.b.d_dx(i))))

    def d_dy(self, i):
        return FnSum((FnProd(self.a.d_dy(i), self.b), FnProd(self.a, self.b.d_dy(i))))

    def conj(self):
        return FnProd(self.a.conj(), self.b.conj())


class FnScale(FnBase):
    def __init__(self, c: complex, f: FnBase):
        self.c = complex(c)
        self.f = f
        self.dim = f.dim
        self.support_radius = f.support_radius

    def __call__(self, pts):
        return self.c * self.f(pts)

    def d_dx(self, i):
        return FnScale(self.c, self.f.d_dx(i))

    def d_dy(self, i):
        return FnScale(self.c, self.f.d_dy(i))

    def conj(self):
        return FnScale(self.c.conjugate(), self.f.conj())


class FnConj(FnBase):
    def __init__(self, f: FnBase):
        self.f = f
        self.dim = f.dim
        self.support_radius = f.support_radius

    def __call__(self, pts):
        return np.conjugate(self.f(pts))

    def d_dx(self, i):
        return FnConj(self.f.d_dx(i))

    def d_dy(self, i):
        return FnConj(self.f.d_dy(i))

    def conj(self):
        return self.f


ZERO_FN = CylinderFn(ZERO, support_radius=0.0)


# ---------------------------------------------------------------------------
# Wirtinger / Gaussian-adjoint operators (work on any FnBase)
# ---------------------------------------------------------------------------

def del_op(f: FnBase, i: int) -> FnBase:
    """Holomorphic Wirtinger derivative: (d/dx_i - i d/dy_i)/2."""
    f = _as_fn(f)
    if isinstance(f, CylinderFn):
        e = add(mul(const(0.5), diff(f.expr, "x", i)),
                mul(const(-0.5j), diff(f.expr, "y", i)))
        return CylinderFn(e, f.support_radius, f.dim)
    return FnSum((FnScale(0.5, f.d_dx(i)), FnScale(-0.5j, f.d_dy(i))))


def delbar_op(f: FnBase, i: int) -> FnBase:
    """Antiholomorphic Wirtinger derivative: (d/dx_i + i d/dy_i)/2."""
    f = _as_fn(f)
    if isinstance(f, CylinderFn):
        e = add(mul(const(0.5), diff(f.expr, "x", i)),
                mul(const(0.5j), diff(f.expr, "y", i)))
        return CylinderFn(e, f.support_radius, f.dim)
    return FnSum((FnScale(0.5, f.d_dx(i)), FnScale(0.5j, f.d_dy(i))))


def wirtinger(f: FnBase, i: int) -> tuple[FnBase, FnBase]:
    return del_op(f, i), delbar_op(f, i)


def delta_op(f: FnBase, i: int, a_i: float) -> FnBase:
    """delta_i f = del_i f - zb_i/(2 a_i^2) * f."""
    if not a_i > 0:
        raise ValueError("a_i must be positive")
    f = _as_fn(f)
    factor = -1.0 / (2.0 * a_i ** 2)
    if isinstance(f, CylinderFn):
        d = del_op(f, i)
        e = add(d.expr, mul(const(factor), zb(i), f.expr))
        return CylinderFn(e, f.support_radius, max(f.dim, i))
    return FnSum((del_op(f, i), FnScale(factor, FnProd(CylinderFn(zb(i)), f))))


def sigma_op(f: FnBase, i: int, a_i: float, varphi: FnBase) -> FnBase:
    """sigma_i f = delta_i f - f * del_i(varphi)."""
    f = _as_fn(f)
    varphi = _as_fn(varphi)
    d = delta_op(f, i, a_i)
    term = FnProd(f, del_op(varphi, i))
    if isinstance(d, CylinderFn) and isinstance(f, CylinderFn) and isinstance(varphi, CylinderFn):
        e = add(d.expr, mul(const(-1), f.expr, del_op(varphi, i).expr))
        return CylinderFn(e, d.support_radius, max(d.dim, varphi.dim))
    return FnSum((d, FnScale(-1.0, term)))


def fn_conj(f: FnBase) -> FnBase:
    return _as_fn(f).conj()


def free_variables(e: Expr) -> set:
    """Set of ('x'|'y', i) variables appearing in the expression."""
    out: set = set()
    stack = [e]
    seen = set()
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        if isinstance(n, VarX):
            out.add(("x", n.i))
        elif isinstance(n, VarY):
            out.add(("y", n.i))
        elif isinstance(n, Add):
            stack.extend(n.terms)
        elif isinstance(n, Mul):
            stack.extend(n.factors)
        elif isinstance(n, Div):
            stack.extend((n.num, n.den))
        elif isinstance(n, Pow):
            stack.append(n.base)
        elif isinstance(n, (Fun, BumpD, CubicStepD, GermStepD, Poly1, Conj)):
            stack.append(n.arg)
    return out


def fd_check(f: Union[Expr, CylinderFn], point: np.ndarray, h_step: float = 1e-5) -> float:
    """Max deviation between symbolic partials and centered finite differences.

    The finite-difference side is the independent oracle; it never reuses the
    symbolic derivative code.
    """
    expr = f.expr if isinstance(f, CylinderFn) else f
    point = np.asarray(point, dtype=float).reshape(-1)
    worst = 0.0
    for kind, i in sorted(free_variables(expr)):
        col = 2 * (i - 1) + (0 if kind == "x" else 1)
        pp = point.copy()
        pm = point.copy()
        pp[col] += h_step
        pm[col] -= h_step
        fd = (eval_expr(expr, pp)[0] - eval_expr(expr, pm)[0]) / (2.0 * h_step)
        sym = eval_expr(diff(expr, kind, i), point)[0]
        worst = max(worst, abs(sym - fd))
    return worst


def norm_sq_coords(n: int) -> Expr:
    """Sum of x_i^2 + y_i^2 over i <= n (the squared norm of the truncation)."""
    return add(*(add(pw(x(i), 2), pw(y(i), 2)) for i in range(1, n + 1))) if n >= 1 else ZERO
