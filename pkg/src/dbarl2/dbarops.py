"""The d-bar operator on forms, the explicit adjoint, and identity verifiers.

On a form of degree (s,t) the operator acts coefficient-wise through the
antiholomorphic Wirtinger derivatives:

    dbar f = (-1)^s sum over I, K, i, J of eps^K_{iJ} dbar_i f[I,J] dz_I dzb_K.

The adjoint is evaluated through its closed form (weights w1, w2 and the
contraction coefficients of the family):

    T* f = (-1)^(s+1) e^(w1-w2) sum' (c[I,iL]/c[I,L])
           (delta_i f[I,iL] - f[I,iL] d_i w2) dz_I dzb_L.

Every named identity (integration by parts, the adjoint pairing, the
commutator, weak d-bar, and the multiplier rule) has a residual function that
shares one point set across both sides, so the Monte Carlo noise pairs off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .forms import Form, inner_vals
from .gaussmeasure import (GaussianSpec, MCEstimate, Quadrature, _estimate,
                           paired_residual, sample)
from .multiindex import WeightFamily, as_multiindex, epsilon, insert
from .symfun import (CylinderFn, FnBase, ZERO_FN, _as_fn, conj_, del_op,
                     delbar_op, delta_op, exp_, mul, sigma_op)


@dataclass
class OperatorContext:
    """Measure, weight family, weight triple (w1, w2, w3), and the fixed varphi."""

    spec: GaussianSpec
    family: WeightFamily
    w1: FnBase
    w2: FnBase
    w3: FnBase
    varphi: FnBase

    def __post_init__(self):
        self.w1 = _as_fn(self.w1)
        self.w2 = _as_fn(self.w2)
        self.w3 = _as_fn(self.w3)
        self.varphi = _as_fn(self.varphi)

    def check_real_weights(self, pts: np.ndarray, tol: float = 1e-12) -> float:
        worst = 0.0
        for w in (self.w1, self.w2, self.w3):
            worst = max(worst, float(np.max(np.abs(np.imag(w(pts)))))) if pts.size else 0.0
        if worst > tol:
            raise ValueError(f"weights have imaginary part {worst} > {tol}")
        return worst


def dbar(f: Form) -> Form:
    """(s,t) -> (s,t+1); the finite i-range is forced by the coefficient dims."""
    s, t = f.degree
    out: dict = {}
    r = max(f.max_dim(), f.max_index())
    sgn_s = -1.0 if s % 2 else 1.0
    for (I, J), fn in f.coeffs.items():
        for i in range(1, r + 1):
            if i in J:
                continue
            sign, K = insert(i, J)
            term = delbar_op(fn, i)
            if hasattr(term, "is_zero") and term.is_zero():
                continue
            term = (sgn_s * sign) * term
            key = (I, K)
            out[key] = out[key] + term if key in out else term
    return Form((s, t + 1), out, f.family)


def Tstar(f: Form, ctx: OperatorContext) -> Form:
    """Closed-form adjoint of dbar between the (w1, w2) weighted spaces."""
    s, tp1 = f.degree
    if tp1 < 1:
        raise ValueError("Tstar needs a form of degree (s, t+1) with t+1 >= 1")
    t = tp1 - 1
    sgn = -1.0 if (s + 1) % 2 else 1.0
    gauge = _weight_gauge(ctx)  # e^{w1 - w2} as a function
    out: dict = {}
    for (I, J), fn in f.coeffs.items():
        for i in J:
            L = tuple(v for v in J if v != i)
            sign = epsilon(i, L, J)
            cIL = ctx.family.coeff(I, L)
            ciL = ctx.family.contract_coeff(I, i, L)
            if ciL == 0.0:
                continue
            contracted = sign * fn if sign != 1 else fn
            inner_term = delta_op(contracted, i, ctx.spec.a(i)) \
                - contracted * del_op(ctx.w2, i)
            term = (sgn * ciL / cIL) * (gauge * inner_term)
            key = (I, L)
            out[key] = out[key] + term if key in out else term
    return Form((s, t), out, f.family)


def _weight_gauge(ctx: OperatorContext) -> FnBase:
    if isinstance(ctx.w1, CylinderFn) and isinstance(ctx.w2, CylinderFn):
        return CylinderFn(exp_(ctx.w1.expr - ctx.w2.expr),
                          dim=max(ctx.w1.dim, ctx.w2.dim))
    return _ExpFn(ctx.w1 - ctx.w2)


class _ExpFn(FnBase):
    def __init__(self, f: FnBase):
        self.f = f
        self.dim = f.dim
        self.support_radius = None

    def __call__(self, pts):
        return np.exp(self.f(pts))

    def d_dx(self, i):
        return self * self.f.d_dx(i)

    def d_dy(self, i):
        return self * self.f.d_dy(i)

    def conj(self):
        return _ExpFn(self.f.conj())


def adjoint_residual(u: Form, f: Form, ctx: OperatorContext,
                     quad: Quadrature) -> MCEstimate:
    """| <Tu, f>_{w2} - <u, T*f>_{w1} | with shared quadrature points."""
    Tu = dbar(u)
    Tsf = Tstar(f, ctx)
    pts, w = quad.nodes_weights(ctx.spec)
    lhs_vals = inner_vals(Tu, f, ctx.w2, pts)
    rhs_vals = inner_vals(u, Tsf, ctx.w1, pts)
    return paired_residual(lhs_vals, rhs_vals, w, quad.deterministic)


def ibp_residual(f: FnBase, g: FnBase, i: int, spec: GaussianSpec,
                 quad: Quadrature, weighted: bool = False,
                 varphi: Optional[FnBase] = None) -> MCEstimate:
    """Residual of the integration-by-parts identity.

    Unweighted: integral(dbar_i f * conj(g)) + integral(f * conj(delta_i g)).
    Weighted:   the same with sigma_i in place of delta_i and an e^{-varphi}
    factor under both integrals.
    """
    f, g = _as_fn(f), _as_fn(g)
    pts, w = quad.nodes_weights(spec)
    a_i = spec.a(i)
    if weighted:
        if varphi is None:
            raise ValueError("weighted variant needs varphi")
        varphi = _as_fn(varphi)
        density = np.exp(-np.real(varphi(pts)))
        lhs = delbar_op(f, i)(pts) * np.conjugate(g(pts)) * density
        rhs = -f(pts) * np.conjugate(sigma_op(g, i, a_i, varphi)(pts)) * density
    else:
        lhs = delbar_op(f, i)(pts) * np.conjugate(g(pts))
        rhs = -f(pts) * np.conjugate(delta_op(g, i, a_i)(pts))
    return paired_residual(lhs, rhs, w, quad.deterministic)


def commutator_residual(h: FnBase, i: int, j: int, ctx: OperatorContext,
                        points: np.ndarray) -> float:
    """Max pointwise residual of the sigma/dbar commutator identity.

    (dbar_i sigma_j - sigma_j dbar_i) h = -h (dbar_i d_j varphi)
                                          - (kron(i,j)/(2 a_j^2)) h.
    """
    h = _as_fn(h)
    varphi = ctx.varphi
    a_j = ctx.spec.a(j)
    left = delbar_op(sigma_op(h, j, a_j, varphi), i) \
        - sigma_op(delbar_op(h, i), j, a_j, varphi)
    cross = h * delbar_op(del_op(varphi, j), i)
    kron = 1.0 if i == j else 0.0
    vals = left(points) + cross(points) + (kron / (2.0 * a_j ** 2)) * h(points)
    return float(np.max(np.abs(vals))) if len(vals) else 0.0


def weak_dbar_residual(f: Form, g: Form, testfn: FnBase, I, K,
                       spec: GaussianSpec, quad: Quadrature) -> MCEstimate:
    """Residual of the weak d-bar identity for the (I, K) component.

    (-1)^(s+1) integral sum_i sum'_J eps^K_{iJ} f[I,J] conj(delta_i testfn)
    minus integral g[I,K] conj(testfn); both sides on shared points.
    """
    I, K = as_multiindex(I), as_multiindex(K)
    s, t = f.degree
    if len(I) != s or len(K) != t + 1:
        raise ValueError("index cardinalities do not match the degrees")
    testfn = _as_fn(testfn)
    pts, w = quad.nodes_weights(spec)
    sgn = -1.0 if (s + 1) % 2 else 1.0
    lhs = np.zeros(pts.shape[0], dtype=complex)
    for i in K:
        J = tuple(v for v in K if v != i)
        sign = epsilon(i, J, K)
        fn = f.coeffs.get((I, J))
        if fn is None or sign == 0:
            continue
        dtest = delta_op(testfn, i, spec.a(i))
        lhs += sgn * sign * fn(pts) * np.conjugate(dtest(pts))
    gfn = g.coeffs.get((I, K), ZERO_FN)
    rhs = gfn(pts) * np.conjugate(testfn(pts))
    return paired_residual(lhs, rhs, w, quad.deterministic)


def wedge_dbar_fn(m: FnBase, f: Form) -> Form:
    """(T m) wedge f = (-1)^s sum eps^K_{iJ} f[I,J] dbar_i(m) dz_I dzb_K."""
    s, t = f.degree
    m = _as_fn(m)
    r = max(f.max_index(), m.dim, f.max_dim())
    sgn_s = -1.0 if s % 2 else 1.0
    out: dict = {}
    for (I, J), fn in f.coeffs.items():
        for i in range(1, r + 1):
            if i in J:
                continue
            sign, K = insert(i, J)
            term = (sgn_s * sign) * (fn * delbar_op(m, i))
            key = (I, K)
            out[key] = out[key] + term if key in out else term
    return Form((s, t + 1), out, f.family)


def multiplier_residual(m: FnBase, f: Form, ctx: OperatorContext,
                        points: np.ndarray) -> float:
    """Max pointwise coefficient residual of T(m f) = m (T f) + (T m) wedge f."""
    m = _as_fn(m)
    lhs = dbar(f.mul_fn(m))
    rhs = dbar(f).mul_fn(m) + wedge_dbar_fn(m, f)
    worst = 0.0
    keys = set(lhs.coeffs) | set(rhs.coeffs)
    for k in keys:
        va = lhs.coeff(*k)(points)
        vb = rhs.coeff(*k)(points)
        if len(va):
            worst = max(worst, float(np.max(np.abs(va - vb))))
    return worst


def st_complex_residual(u: Form, points: np.ndarray) -> float:
    """Max pointwise coefficient of dbar(dbar u): the complex property S T = 0."""
    ddu = dbar(dbar(u))
    worst = 0.0
    for fn in ddu.coeffs.values():
        vals = fn(points)
        if len(vals):
            worst = max(worst, float(np.max(np.abs(vals))))
    return worst


def support_leak(form: Form, points_outside: np.ndarray) -> float:
    """Max |coefficient| at points outside the declared support."""
    worst = 0.0
    for fn in form.coeffs.values():
        vals = fn(points_outside)
        if len(vals):
            worst = max(worst, float(np.max(np.abs(vals))))
    return worst
