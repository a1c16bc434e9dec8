"""Galerkin minimal-norm solver for the d-bar equation and the L2 bound audits.

The trial space is a tensor Hermite-polynomial dictionary times a bump
cut-off (so every trial function is smooth and compactly supported); the
target space additionally carries the cut-off's derivative profile so the
image of the trial space is represented exactly.  Matrices are assembled by
deterministic Gauss-Hermite quadrature; the normal equations carry a 1e-10
ridge and are solved by conjugate gradient, which keeps the iterates inside
the range of the discrete operator and therefore returns the minimal-norm
least-squares solution.

Bound checks follow the weighted estimates: the key inequality
||T* f||^2_{w1} + ||S f||^2_{w3} >= c0 ||f||^2_{w2} (gated on the coefficient
conditions and the curvature condition), the norm bound
sqrt(c0) ||u||_{w1} <= ||f||_{w2}, the Levi-weighted bound, and the
(1 + ||z||^2)^-2 variant with its bounded-domain form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import hermite_e as herme
from numpy.polynomial import polynomial as npoly

from .dbarops import OperatorContext, Tstar, dbar
from .domains import Domain, complex_hessian
from .forms import Form, inner_vals, norm_sq, support_mask
from .gaussmeasure import GaussianSpec, Quadrature, sample
from .multiindex import check_conditions
from .symfun import (BumpD, CylinderFn, add, const, mul, norm_sq_coords,
                     poly1, pw, x, y, _as_fn)
from .weights import Cond4Report, WeightTriple, check_cond4


# ---------------------------------------------------------------------------
# Dictionary
# ---------------------------------------------------------------------------

def _herme_poly1(var, p: int, a: float):
    """He_p(v / a) as a polynomial expression in the variable."""
    cs = herme.herme2poly([0.0] * p + [1.0])
    scaled = tuple(c / a ** k for k, c in enumerate(cs))
    return poly1(var, scaled)


def scalar_dictionary(n: int, degree: int, radius: float, spec: GaussianSpec,
                      profiles: Sequence[int] = (0,)) -> list:
    """Hermite-product polynomials times bump-profile derivatives.

    profiles lists derivative orders of the bump factor: 0 gives the cut-off
    itself, 1 its first derivative (needed to span the image of d-bar applied
    to profile-0 elements).
    """
    s_expr = mul(const(1.0 / radius ** 2), norm_sq_coords(n))
    out = []
    for prof in profiles:
        chi = BumpD(s_expr, prof)
        for combo in _degree_combos(2 * n, degree):
            factors = []
            for i in range(1, n + 1):
                px, py = combo[2 * (i - 1)], combo[2 * (i - 1) + 1]
                a = spec.a(i)
                if px:
                    factors.append(_herme_poly1(x(i), px, a))
                if py:
                    factors.append(_herme_poly1(y(i), py, a))
            out.append(CylinderFn(mul(*factors, chi) if factors else mul(chi, const(1.0)),
                                  support_radius=radius, dim=n))
    return out


def _degree_combos(slots: int, degree: int):
    """All exponent tuples with total degree <= degree."""
    combo = [0] * slots

    def rec(pos, left):
        if pos == slots:
            yield tuple(combo)
            return
        for v in range(left + 1):
            combo[pos] = v
            yield from rec(pos + 1, left - v)
        combo[pos] = 0

    yield from rec(0, degree)


# ---------------------------------------------------------------------------
# Solve problem and assembly
# ---------------------------------------------------------------------------

@dataclass
class SolveProblem:
    ctx: OperatorContext
    domain: Domain
    f: Form
    degree: int = 8
    n: int = 1
    radius: float = 0.8
    quad: Quadrature = field(default_factory=lambda: Quadrature("gauss_hermite",
                                                                nodes_per_axis=24))
    tol_closed: float = 1e-8
    ridge: float = 1e-10
    cg_maxiter: int = 5000
    cg_tol: float = 1e-13
    bound_tol: float = 1e-6


class ClosednessError(ValueError):
    pass


@dataclass
class SolveReport:
    residual: float
    norm_u_w1: float
    norm_f_w2: float
    c0: float
    bound_pass: bool
    cg_iters: int
    basis_dim: int
    kernel_orth: float
    cg_history: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"residual": self.residual, "norm_u_w1": self.norm_u_w1,
                "norm_f_w2": self.norm_f_w2, "c0": self.c0,
                "bound_pass": self.bound_pass, "cg_iters": self.cg_iters,
                "basis_dim": self.basis_dim}


def _cg(K: np.ndarray, b: np.ndarray, ridge: float, maxiter: int, tol: float):
    """Hermitian PSD conjugate gradient on (K + ridge I) v = b, from zero."""
    v = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    rs = float(np.real(np.vdot(r, r)))
    b0 = math.sqrt(float(np.real(np.vdot(b, b)))) or 1.0
    history = []
    it = 0
    for it in range(1, maxiter + 1):
        Kp = K @ p + ridge * p
        alpha = rs / float(np.real(np.vdot(p, Kp)))
        v += alpha * p
        r -= alpha * Kp
        rs_new = float(np.real(np.vdot(r, r)))
        history.append(math.sqrt(rs_new) / b0)
        if math.sqrt(rs_new) <= tol * b0:
            return v, it, history
        p = r + (rs_new / rs) * p
        rs = rs_new
    return v, it, history


def _stack_rows(forms_per_basis, slots, pts, wq, weight_vals, family):
    """Rows (slot x node) by columns (basis): sqrt(c w e^{-w}) . coeff values."""
    M = len(pts)
    cols = []
    for fb in forms_per_basis:
        col = np.empty(M * len(slots), dtype=complex)
        for si, key in enumerate(slots):
            fn = fb.coeffs.get(key)
            vals = fn(pts) if fn is not None else np.zeros(M, dtype=complex)
            c = family.coeff(*key)
            col[si * M:(si + 1) * M] = vals * np.sqrt(c * wq * weight_vals)
        cols.append(col)
    return np.stack(cols, axis=1)


def solve_min_norm(p: SolveProblem) -> tuple[Form, SolveReport]:
    """Minimal-norm least-squares solve of dbar u = f in the Galerkin space."""
    ctx, f = p.ctx, p.f
    spec = ctx.spec
    s, tp1 = f.degree
    if tp1 < 1:
        raise ValueError("the target must be a form of degree (s, t+1)")

    # closedness gate: dbar f must vanish at the audit points
    audit_pts = sample(spec, 200, 20_202, n=spec.trunc_dim)
    df = dbar(f)
    worst = 0.0
    for fn in df.coeffs.values():
        vals = fn(audit_pts)
        if len(vals):
            worst = max(worst, float(np.max(np.abs(vals))))
    if worst > p.tol_closed:
        raise ClosednessError(f"dbar(f) reaches {worst:.3e} at audit points "
                              f"(gate {p.tol_closed:.1e}); f is not closed")

    if f.is_zero():
        u = Form((s, tp1 - 1), {}, f.family)
        return u, SolveReport(residual=0.0, norm_u_w1=0.0, norm_f_w2=0.0, c0=1.0,
                              bound_pass=True, cg_iters=0, basis_dim=0, kernel_orth=0.0)

    from itertools import combinations
    idx_range = range(1, p.n + 1)
    slots_u = [(I, L) for I in combinations(idx_range, s)
               for L in combinations(idx_range, tp1 - 1)]
    slots_f = sorted(set([(I, J) for I in combinations(idx_range, s)
                          for J in combinations(idx_range, tp1)]) | set(f.coeffs))

    dict_u = scalar_dictionary(p.n, p.degree, p.radius, spec, profiles=(0,))
    basis_forms = []
    for key in slots_u:
        for b in dict_u:
            basis_forms.append(Form((s, tp1 - 1), {key: b}, f.family))

    pts, wq = p.quad.nodes_weights(spec, n=spec.trunc_dim)
    ew1 = np.exp(-np.real(ctx.w1(pts)))
    ew2 = np.exp(-np.real(ctx.w2(pts)))

    E = _stack_rows(basis_forms, slots_u, pts, wq, ew1, f.family)
    images = [dbar(b) for b in basis_forms]
    D = _stack_rows(images, slots_f, pts, wq, ew2, f.family)
    yvec = np.zeros(D.shape[0], dtype=complex)
    M = len(pts)
    for si, key in enumerate(slots_f):
        fn = f.coeffs.get(key)
        if fn is None:
            continue
        yvec[si * M:(si + 1) * M] = fn(pts) * np.sqrt(f.family.coeff(*key) * wq * ew2)

    # whiten the trial-space metric
    G = E.conj().T @ E
    w_eval, w_vec = np.linalg.eigh(G)
    keep = w_eval > max(w_eval[-1], 0.0) * 1e-13
    W = w_vec[:, keep] / np.sqrt(w_eval[keep])
    Dw = D @ W
    K = Dw.conj().T @ Dw
    b = Dw.conj().T @ yvec
    v, iters, history = _cg(K, b, p.ridge, p.cg_maxiter, p.cg_tol)
    a = W @ v

    # kernel orthogonality: SVD null directions of the whitened image map
    _, sv, Vh = np.linalg.svd(Dw, full_matrices=True)
    smax = sv[0] if len(sv) else 0.0
    null_mask = np.ones(Vh.shape[0], dtype=bool)
    null_mask[:len(sv)] = sv <= 1e-10 * max(smax, 1.0)
    kernel_orth = 0.0
    if np.any(null_mask):
        proj = Vh[null_mask] @ v
        kernel_orth = float(np.max(np.abs(proj)) / max(np.linalg.norm(v), 1e-300))

    res_vec = D @ a - yvec
    norm_f = float(np.linalg.norm(yvec))
    residual = float(np.linalg.norm(res_vec)) / max(norm_f, 1e-300)
    norm_u = float(np.linalg.norm(E @ a))

    coeffs: dict = {}
    for ki, key in enumerate(slots_u):
        block = a[ki * len(dict_u):(ki + 1) * len(dict_u)]
        comb = None
        for cval, bfn in zip(block, dict_u):
            if cval == 0:
                continue
            term = complex(cval) * bfn
            comb = term if comb is None else comb + term
        if comb is not None:
            coeffs[key] = comb
    u = Form((s, tp1 - 1), coeffs, f.family)

    rep_cond = check_conditions(f.family, max_index=max(p.n, s + tp1) + 2, s=s, t=tp1 - 1)
    c0 = rep_cond.c0_inf
    bound_pass = math.sqrt(max(c0, 0.0)) * norm_u <= norm_f * (1.0 + p.bound_tol)
    report = SolveReport(residual=residual, norm_u_w1=norm_u, norm_f_w2=norm_f,
                         c0=c0, bound_pass=bool(bound_pass), cg_iters=iters,
                         basis_dim=E.shape[1], kernel_orth=kernel_orth,
                         cg_history=history if iters >= p.cg_maxiter else [])
    return u, report


# ---------------------------------------------------------------------------
# Key inequality and bound audits
# ---------------------------------------------------------------------------

@dataclass
class CheckOutcome:
    check_id: str
    lhs: float
    rhs: float
    stderr: float
    margin: float
    passed: Optional[bool]
    reason: str = ""


def key_inequality_check(f: Form, ctx: OperatorContext, quad: Quadrature,
                         triple: WeightTriple, domain: Domain,
                         cond4_points: np.ndarray,
                         max_index: Optional[int] = None) -> CheckOutcome:
    """||T* f||^2_{w1} + ||S f||^2_{w3} - c0 ||f||^2_{w2} with preconditions.

    Refuses (passed = None) when the coefficient conditions or the curvature
    condition fail; those are the estimate's hypotheses.
    """
    s, tp1 = f.degree
    t = tp1 - 1
    mi = max_index or max(f.max_index() + 1, s + tp1 + 2)
    rep = check_conditions(f.family, max_index=mi, s=s, t=t)
    if not rep.passed:
        return CheckOutcome("key_inequality", 0.0, 0.0, 0.0, 0.0, None,
                            reason=f"coefficient conditions fail: c0={rep.c0_inf}, "
                                   f"c1={rep.c1_sup}, mult={rep.multiplicative_ok}")
    n = ctx.spec.trunc_dim
    c4 = check_cond4(triple.phi, triple.psi, domain, n, cond4_points)
    if not c4.passed:
        return CheckOutcome("key_inequality", 0.0, 0.0, 0.0, 0.0, None,
                            reason=f"curvature condition fails with margin {c4.margin:.3e}")

    tsf = Tstar(f, ctx)
    sf_ = dbar(f)
    pts, wq = quad.nodes_weights(ctx.spec)

    def sq_vals(form, weight):
        total = np.zeros(pts.shape[0])
        for (I, J), fn in form.coeffs.items():
            c = form.family.coeff(I, J)
            total += c * np.abs(fn(pts)) ** 2
        mask = support_mask(pts, form.support_radius(), form.max_dim())
        out = np.zeros_like(total)
        if mask is None:
            out = total * np.exp(-np.real(weight(pts)))
        elif np.any(mask):
            out[mask] = total[mask] * np.exp(-np.real(weight(pts[mask])))
        return out

    lhs_vals = sq_vals(tsf, ctx.w1) + sq_vals(sf_, ctx.w3)
    rhs_vals = rep.c0_inf * sq_vals(f, ctx.w2)
    diff = lhs_vals - rhs_vals
    lhs = float(np.sum(wq * lhs_vals))
    rhs = float(np.sum(wq * rhs_vals))
    margin = float(np.sum(wq * diff))
    if quad.deterministic:
        se = 0.0
    else:
        se = float(np.std(diff) / math.sqrt(len(diff)))
    passed = margin >= -3.0 * se if se > 0 else margin >= -1e-9 * max(abs(lhs), abs(rhs), 1.0)
    return CheckOutcome("key_inequality", lhs, rhs, se, margin, bool(passed))


def weighted_bound_check(u: Form, f: Form, ctx: OperatorContext, c_fn,
                         quad: Quadrature, domain: Domain,
                         levi_points: np.ndarray, tol: float = 1e-6) -> CheckOutcome:
    """Levi-weighted estimate: ||u||^2_phi <= 2 ||f/sqrt(c)||^2_phi / (c0 (t+1))."""
    c_fn = _as_fn(c_fn)
    s, tp1 = f.degree
    t = tp1 - 1
    n = ctx.spec.trunc_dim
    phi = ctx.w3
    H = complex_hessian(phi if isinstance(phi, CylinderFn) else _as_fn(phi),
                        levi_points, n)
    eig = np.linalg.eigvalsh(H)[:, 0]
    cvals = np.real(c_fn(levi_points))
    if float(np.min(eig - cvals)) < -1e-9:
        return CheckOutcome("weighted_bound", 0.0, 0.0, 0.0, 0.0, None,
                            reason="Levi form does not dominate c at the audit points")
    rep = check_conditions(f.family, max_index=max(f.max_index(), s + tp1) + 2, s=s, t=t)
    pts, wq = quad.nodes_weights(ctx.spec)
    ephi = np.exp(-np.real(phi(pts)))

    lhs_vals = np.zeros(pts.shape[0])
    for (I, L), fn in u.coeffs.items():
        lhs_vals += u.family.coeff(I, L) * np.abs(fn(pts)) ** 2
    lhs_vals = lhs_vals * ephi
    rhs_vals = np.zeros(pts.shape[0])
    cpts = np.real(c_fn(pts))
    for (I, J), fn in f.coeffs.items():
        rhs_vals += f.family.coeff(I, J) * np.abs(fn(pts)) ** 2 / cpts
    rhs_vals = 2.0 * rhs_vals * ephi / (rep.c0_inf * (t + 1))

    lhs = float(np.sum(wq * lhs_vals))
    rhs = float(np.sum(wq * rhs_vals))
    diff = rhs_vals - lhs_vals
    se = 0.0 if quad.deterministic else float(np.std(diff) / math.sqrt(len(diff)))
    margin = rhs - lhs
    passed = lhs <= rhs * (1.0 + tol) + 3.0 * se
    return CheckOutcome("weighted_bound", lhs, rhs, se, margin, bool(passed))


def hormander_bound_check(u: Form, f: Form, ctx: OperatorContext, domain: Domain,
                          quad: Quadrature, levi_points: np.ndarray,
                          bounded: bool = False, sup_norm_sq: float = 1.0,
                          tol: float = 1e-6) -> CheckOutcome:
    """The (1 + ||z||^2)^-2 weighted bound; bounded domains use the sup factor."""
    s, tp1 = f.degree
    t = tp1 - 1
    n = ctx.spec.trunc_dim
    phi = ctx.w3
    H = complex_hessian(phi, levi_points, n)
    if float(np.min(np.linalg.eigvalsh(H)[:, 0])) < -1e-9:
        return CheckOutcome("hormander_bound", 0.0, 0.0, 0.0, 0.0, None,
                            reason="phi is not plurisubharmonic at the audit points")
    rep = check_conditions(f.family, max_index=max(f.max_index(), s + tp1) + 2, s=s, t=t)
    pts, wq = quad.nodes_weights(ctx.spec)
    ephi = np.exp(-np.real(phi(pts)))
    zsq = np.sum(pts ** 2, axis=1)

    u_vals = np.zeros(pts.shape[0])
    for (I, L), fn in u.coeffs.items():
        u_vals += u.family.coeff(I, L) * np.abs(fn(pts)) ** 2
    f_vals = np.zeros(pts.shape[0])
    for (I, J), fn in f.coeffs.items():
        f_vals += f.family.coeff(I, J) * np.abs(fn(pts)) ** 2
    rhs_vals = f_vals * ephi / (rep.c0_inf * (t + 1))
    if bounded:
        lhs_vals = u_vals * ephi
        factor = (1.0 + sup_norm_sq) ** 2
        rhs_vals = factor * rhs_vals
    else:
        lhs_vals = u_vals * ephi / (1.0 + zsq) ** 2
    lhs = float(np.sum(wq * lhs_vals))
    rhs = float(np.sum(wq * rhs_vals))
    diff = rhs_vals - lhs_vals
    se = 0.0 if quad.deterministic else float(np.std(diff) / math.sqrt(len(diff)))
    passed = lhs <= rhs * (1.0 + tol) + 3.0 * se
    return CheckOutcome("hormander_bound", lhs, rhs, se, rhs - lhs, bool(passed))


# ---------------------------------------------------------------------------
# Cauchy transform oracle (one complex variable)
# ---------------------------------------------------------------------------

@dataclass
class CauchyOracle:
    """u(z) = -(1/pi) integral of f(zeta)/(zeta - z) over the plane.

    Polar quadrature around each evaluation point keeps the integrand smooth;
    the radial extent covers the support of f from anywhere in the evaluation
    region.
    """

    f1: object
    reach: float
    nr: int = 512
    nt: int = 384

    def _apply(self, g, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        N = len(pts)
        rr, wr = np.polynomial.legendre.leggauss(self.nr)
        r = 0.5 * self.reach * (rr + 1.0)
        wr = 0.5 * self.reach * wr
        th = (np.arange(self.nt) + 0.5) * (2.0 * math.pi / self.nt)
        wt = 2.0 * math.pi / self.nt
        cx, sx = np.cos(th), np.sin(th)
        phase = (cx - 1j * sx)  # e^{-i theta}
        out = np.zeros(N, dtype=complex)
        shift = np.empty((N * self.nt, 2))
        base_x = np.repeat(pts[:, 0], self.nt)
        base_y = np.repeat(pts[:, 1], self.nt)
        tiled_cx = np.tile(cx, N)
        tiled_sx = np.tile(sx, N)
        tiled_phase = np.tile(phase, N)
        for rj, wj in zip(r, wr):
            shift[:, 0] = base_x + rj * tiled_cx
            shift[:, 1] = base_y + rj * tiled_sx
            vals = (g(shift) * tiled_phase).reshape(N, self.nt)
            out += (wj * wt) * vals.sum(axis=1)
        return -out / math.pi

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        return self._apply(self.f1, pts)

    def dbar_residual_on_grid(self, extent: float = 1.0, res: int = 21) -> float:
        """Max |dbar u_c - f| on a grid.

        The implemented u_c is a finite sum of shifted copies of f, so its
        dbar is exactly the same quadrature applied to the symbolic dbar of f;
        no finite differences enter.
        """
        from .symfun import delbar_op

        ax = np.linspace(-extent, extent, res)
        X, Y = np.meshgrid(ax, ax, indexing="ij")
        base = np.stack([X.reshape(-1), Y.reshape(-1)], axis=1)
        df = delbar_op(_as_fn(self.f1), 1)
        dbar_u = self._apply(df, base)
        fv = self.f1(base)
        return float(np.max(np.abs(dbar_u - fv)))
