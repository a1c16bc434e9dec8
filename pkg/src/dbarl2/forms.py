"""Sparse (s,t)-forms with weighted L2 norms and index contraction.

A form is a finite sum of coefficients f[I, J] dz_I wedge dzb_J over strictly
increasing multi-indices with |I| = s and |J| = t.  Coefficients are cylinder
functions (or any FnBase); absent keys are zero.  The squared norm is

    sum' c[I, J] * integral of |f[I, J]|^2 e^(-w) dP,

computed with one shared point set across all coefficients so that residual
checks downstream can pair their estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .gaussmeasure import GaussianSpec, MCEstimate, Quadrature, _estimate
from .multiindex import MultiIndex, WeightFamily, as_multiindex, epsilon, insert
from .symfun import FnBase, ZERO_FN, _as_fn


Key = Tuple[MultiIndex, MultiIndex]


class DegreeError(ValueError):
    pass


@dataclass
class Form:
    degree: Tuple[int, int]
    coeffs: Dict[Key, FnBase] = field(default_factory=dict)
    family: WeightFamily = None

    def __post_init__(self):
        s, t = self.degree
        if s < 0 or t < 0:
            raise DegreeError("degrees must be nonnegative")
        clean = {}
        for (I, J), fn in self.coeffs.items():
            I, J = as_multiindex(I), as_multiindex(J)
            if len(I) != s or len(J) != t:
                raise DegreeError(f"key ({I},{J}) has wrong cardinalities for degree {self.degree}")
            fn = _as_fn(fn)
            if not (hasattr(fn, "is_zero") and fn.is_zero()):
                clean[(I, J)] = fn
        self.coeffs = clean

    @property
    def s(self) -> int:
        return self.degree[0]

    @property
    def t(self) -> int:
        return self.degree[1]

    def coeff(self, I, J) -> FnBase:
        return self.coeffs.get((tuple(I), tuple(J)), ZERO_FN)

    def max_index(self) -> int:
        out = 0
        for (I, J) in self.coeffs:
            out = max(out, max(I, default=0), max(J, default=0))
        return out

    def max_dim(self) -> int:
        return max((fn.dim for fn in self.coeffs.values()), default=0)

    def support_radius(self) -> Optional[float]:
        radii = [fn.support_radius for fn in self.coeffs.values()]
        if not radii:
            return 0.0
        if any(r is None for r in radii):
            return None
        return max(radii)

    def is_zero(self) -> bool:
        return not self.coeffs

    def map_coeffs(self, op) -> "Form":
        return Form(self.degree, {k: op(v) for k, v in self.coeffs.items()}, self.family)

    def __add__(self, other: "Form") -> "Form":
        if not isinstance(other, Form):
            return NotImplemented
        if other.degree != self.degree:
            raise DegreeError("cannot add forms of different degrees")
        out = dict(self.coeffs)
        for k, fn in other.coeffs.items():
            out[k] = out[k] + fn if k in out else fn
        return Form(self.degree, out, self.family or other.family)

    def __sub__(self, other: "Form") -> "Form":
        return self + other.scale(-1.0)

    def scale(self, c: complex) -> "Form":
        if c == 0:
            return Form(self.degree, {}, self.family)
        return self.map_coeffs(lambda fn: c * fn)

    def mul_fn(self, m: FnBase) -> "Form":
        """Multiply every coefficient by a scalar function (m . f)."""
        m = _as_fn(m)
        return self.map_coeffs(lambda fn: m * fn)

    def contract(self, I, i: int, L) -> FnBase:
        """f[I, iL] = sum' over |J| = t of eps^J_{iL} f[I, J]; one surviving term."""
        I, L = as_multiindex(I), as_multiindex(L)
        sign, K = insert(i, L)
        if sign == 0:
            return ZERO_FN
        fn = self.coeffs.get((I, K))
        if fn is None:
            return ZERO_FN
        return sign * fn if sign != 1 else fn


def support_mask(pts: np.ndarray, radius: Optional[float], dim: int) -> Optional[np.ndarray]:
    """Boolean mask of points inside the support ball (None when unbounded)."""
    if radius is None:
        return None
    cols = min(2 * dim, pts.shape[1])
    rsq = np.sum(pts[:, :cols] ** 2, axis=1)
    return rsq <= radius * radius * (1.0 + 1e-12)


def _weighted_sq_vals(form: Form, w_fn, pts: np.ndarray) -> np.ndarray:
    """Pointwise Sum' c[I,J] |f[I,J]|^2 e^{-w}; weight evaluated on support only."""
    total = np.zeros(pts.shape[0], dtype=float)
    for (I, J), fn in form.coeffs.items():
        c = form.family.coeff(I, J) if form.family is not None else 1.0
        total += c * np.abs(fn(pts)) ** 2
    if w_fn is None:
        return total
    mask = support_mask(pts, form.support_radius(), form.max_dim())
    out = np.zeros_like(total)
    if mask is None:
        out = total * np.exp(-np.real(_as_fn(w_fn)(pts)))
    else:
        if np.any(mask):
            out[mask] = total[mask] * np.exp(-np.real(_as_fn(w_fn)(pts[mask])))
    return out


def norm_sq(form: Form, w_fn, spec: GaussianSpec, quad: Quadrature) -> MCEstimate:
    """Weighted squared norm with a shared point set across coefficients."""
    if form.max_dim() > spec.trunc_dim:
        raise ValueError("form coefficients exceed the truncation dimension")
    pts, wq = quad.nodes_weights(spec)
    vals = _weighted_sq_vals(form, w_fn, pts)
    return _estimate(vals.astype(complex), wq, quad.deterministic, getattr(quad, "seed", None))


def inner(fa: Form, fb: Form, w_fn, spec: GaussianSpec, quad: Quadrature) -> MCEstimate:
    """Weighted inner product sum' c[I,J] integral f_a conj(f_b) e^{-w} dP."""
    if fa.degree != fb.degree:
        raise DegreeError("inner product needs equal degrees")
    pts, wq = quad.nodes_weights(spec)
    vals = inner_vals(fa, fb, w_fn, pts)
    return _estimate(vals, wq, quad.deterministic, getattr(quad, "seed", None))


def inner_vals(fa: Form, fb: Form, w_fn, pts: np.ndarray) -> np.ndarray:
    """Pointwise integrand of the weighted inner product (for paired residuals)."""
    family = fa.family or fb.family
    total = np.zeros(pts.shape[0], dtype=complex)
    keys = set(fa.coeffs) & set(fb.coeffs)
    for k in keys:
        c = family.coeff(*k) if family is not None else 1.0
        total += c * fa.coeffs[k](pts) * np.conjugate(fb.coeffs[k](pts))
    if w_fn is None:
        return total
    ra, rb = fa.support_radius(), fb.support_radius()
    if ra is None or rb is None:
        radius = None
    else:
        radius = min(ra, rb)
    mask = support_mask(pts, radius, max(fa.max_dim(), fb.max_dim()))
    out = np.zeros_like(total)
    if mask is None:
        out = total * np.exp(-np.real(_as_fn(w_fn)(pts)))
    else:
        if np.any(mask):
            out[mask] = total[mask] * np.exp(-np.real(_as_fn(w_fn)(pts[mask])))
    return out


def parse_form_literal(entries, degree, family: WeightFamily,
                       support_radius: Optional[float] = None) -> Form:
    """Build a form from config-file literals: [{"I": [...], "J": [...], "coeff": "expr"}]."""
    from .symfun import CylinderFn

    coeffs = {}
    for ent in entries:
        I = as_multiindex(ent.get("I", ()))
        J = as_multiindex(ent.get("J", ()))
        fn = CylinderFn(ent["coeff"], support_radius=ent.get("support_radius", support_radius))
        key = (I, J)
        coeffs[key] = coeffs[key] + fn if key in coeffs else fn
    return Form(tuple(degree), coeffs, family)
