"""Pseudo-convex domain catalog, exhaustion geometry, and Levi-form scans.

Each domain carries a rule producing the truncated exhaustion function eta_n
as a symbolic cylinder function, an analytic boundary-distance rule for the
catalog kinds, and an interior sampler for the audits.  The Levi form is the
complex Hessian [del_i delbar_j eta]; positivity at sampled points is the
operational pseudo-convexity check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .symfun import (CylinderFn, Expr, add, const, del_op, delbar_op, diff,
                     eval_expr, log_, mul, norm_sq_coords, pw, x, y)


class BoundaryError(ValueError):
    """Evaluation at or beyond the domain boundary."""


@dataclass
class Domain:
    kind: str
    eta_builder: Callable[[int], CylinderFn]
    boundary_distance: Optional[Callable[[np.ndarray], np.ndarray]] = None
    interior_sampler: Optional[Callable[[int, int, int], np.ndarray]] = None
    params: dict = field(default_factory=dict)

    def eta(self, n: int) -> CylinderFn:
        return self.eta_builder(n)

    def sample_interior(self, n: int, N: int, seed: int) -> np.ndarray:
        if self.interior_sampler is None:
            raise ValueError(f"domain kind {self.kind!r} has no interior sampler")
        return self.interior_sampler(n, N, seed)

    def sample_sublevel(self, n: int, tau: float, N: int, seed: int,
                        max_tries: int = 60) -> np.ndarray:
        """Rejection-sample interior points with eta <= tau."""
        eta = self.eta(n)
        got = []
        count = 0
        for trial in range(max_tries):
            pts = self.sample_interior(n, max(2 * N, 64), seed + 7919 * trial)
            vals = np.real(eta(pts))
            keep = pts[vals <= tau]
            if len(keep):
                got.append(keep)
                count += len(keep)
            if count >= N:
                break
        if count == 0:
            raise ValueError(f"no interior samples with eta <= {tau}")
        return np.concatenate(got, axis=0)[:N]


def _center_cols(center: Sequence[complex], n: int) -> np.ndarray:
    out = np.zeros(2 * n)
    for i, c in enumerate(center[:n]):
        out[2 * i] = complex(c).real
        out[2 * i + 1] = complex(c).imag
    return out


def ball(center: Sequence[complex] = (), r: float = 1.0) -> Domain:
    """B_r(center): eta_n = -ln(1 - ||(z - center)/r||^2 over the first n coords)."""
    if not r > 0:
        raise ValueError("radius must be positive")
    center = tuple(complex(c) for c in center)

    def builder(n: int) -> CylinderFn:
        terms = []
        for i in range(1, n + 1):
            cx = center[i - 1].real if i <= len(center) else 0.0
            cy = center[i - 1].imag if i <= len(center) else 0.0
            terms.append(pw(add(x(i), const(-cx)), 2))
            terms.append(pw(add(y(i), const(-cy)), 2))
        dev = mul(const(1.0 / r ** 2), add(*terms))
        return CylinderFn(mul(const(-1), log_(add(const(1.0), mul(const(-1), dev)))), dim=n)

    def bdist(pts: np.ndarray) -> np.ndarray:
        n = pts.shape[1] // 2
        c = _center_cols(center, n)
        rad = np.sqrt(np.sum((pts - c) ** 2, axis=1))
        return r - rad

    def sampler(n: int, N: int, seed: int) -> np.ndarray:
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(2,)))
        v = rng.standard_normal((N, 2 * n))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        rho = rng.random(N) ** (1.0 / (2 * n))
        pts = r * 0.9999 * rho[:, None] * v
        return pts + _center_cols(center, n)

    return Domain("ball", builder, bdist, sampler, {"center": center, "r": r})


def polydisc() -> Domain:
    """Hilbert polydisc: eta_n = product over i <= n of 1/(1 - |z_i|^2)."""

    def builder(n: int) -> CylinderFn:
        factors = [pw(add(const(1.0), mul(const(-1), add(pw(x(i), 2), pw(y(i), 2)))), -1)
                   for i in range(1, n + 1)]
        return CylinderFn(mul(*factors), dim=n)

    def bdist(pts: np.ndarray) -> np.ndarray:
        n = pts.shape[1] // 2
        mods = np.sqrt(pts[:, 0::2] ** 2 + pts[:, 1::2] ** 2)
        gaps = 1.0 - mods
        # coordinates beyond the truncation are 0, so the gap there is 1
        return np.minimum(np.min(gaps, axis=1), 1.0)

    def sampler(n: int, N: int, seed: int) -> np.ndarray:
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(3,)))
        rad = np.sqrt(rng.random((N, n))) * 0.999
        th = rng.random((N, n)) * 2 * math.pi
        pts = np.empty((N, 2 * n))
        pts[:, 0::2] = rad * np.cos(th)
        pts[:, 1::2] = rad * np.sin(th)
        return pts

    return Domain("polydisc", builder, bdist, sampler, {})


def cylinder_over(eta_base: CylinderFn, m: int,
                  base_boundary: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                  base_sampler: Optional[Callable[[int, int], np.ndarray]] = None) -> Domain:
    """Cylinder over a finite-dimensional base: eta(z) = eta_base(z_m) + ||z||^2.

    The base exhaustion (user-supplied, strictly plurisubharmonic for the base
    set) is accepted as given and only checked numerically.
    """

    def builder(n: int) -> CylinderFn:
        if n < m:
            raise ValueError(f"cylinder truncation needs n >= {m}")
        return CylinderFn(add(eta_base.expr, norm_sq_coords(n)), dim=n)

    def sampler(n: int, N: int, seed: int) -> np.ndarray:
        if base_sampler is None:
            raise ValueError("cylinder domain needs a base sampler")
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(4,)))
        base_pts = base_sampler(N, seed)
        tail = rng.standard_normal((N, 2 * (n - m))) * 0.3
        return np.concatenate([base_pts, tail], axis=1)

    def bdist(pts: np.ndarray) -> np.ndarray:
        if base_boundary is None:
            raise ValueError("cylinder domain has no boundary rule")
        return base_boundary(pts[:, :2 * m])

    return Domain("cylinder_over", builder,
                  bdist if base_boundary is not None else None,
                  sampler if base_sampler is not None else None,
                  {"m": m})


def translated_scaled(base: Domain, a: Sequence[complex] = (),
                      c: Union[complex, Sequence[complex]] = 1.0) -> Domain:
    """V + a and cV from a base domain: eta(z) = eta_base((z_i - a_i)/c_i)."""
    a = tuple(complex(v) for v in a)
    if isinstance(c, (int, float, complex)):
        c_rule = lambda i: complex(c)
    else:
        cs = tuple(complex(v) for v in c)
        c_rule = lambda i: cs[i - 1] if i <= len(cs) else 1.0 + 0.0j

    def builder(n: int) -> CylinderFn:
        base_eta = base.eta(n)
        subs = {}
        for i in range(1, n + 1):
            ai = a[i - 1] if i <= len(a) else 0.0 + 0.0j
            ci = c_rule(i)
            if ci == 0:
                raise ValueError("scaling coefficients must be nonzero")
            # (z_i - a_i)/c_i in real coordinates; c_i complex rotates/scales
            re, im = ci.real, ci.imag
            det = re * re + im * im
            xs = add(x(i), const(-ai.real))
            ys = add(y(i), const(-ai.imag))
            subs[("x", i)] = mul(const(1.0 / det), add(mul(const(re), xs), mul(const(im), ys)))
            subs[("y", i)] = mul(const(1.0 / det), add(mul(const(re), ys), mul(const(-im), xs)))
        return CylinderFn(_substitute(base_eta.expr, subs), dim=n)

    def sampler(n: int, N: int, seed: int) -> np.ndarray:
        pts = base.sample_interior(n, N, seed)
        out = pts.copy()
        for i in range(1, n + 1):
            ci = c_rule(i)
            ai = a[i - 1] if i <= len(a) else 0.0 + 0.0j
            zx = pts[:, 2 * i - 2] * ci.real - pts[:, 2 * i - 1] * ci.imag + ai.real
            zy = pts[:, 2 * i - 2] * ci.imag + pts[:, 2 * i - 1] * ci.real + ai.imag
            out[:, 2 * i - 2] = zx
            out[:, 2 * i - 1] = zy
        return out

    return Domain("translated_scaled", builder, None, sampler,
                  {"base": base.kind, "a": a})


def custom(eta_builder: Callable[[int], CylinderFn],
           interior_sampler=None) -> Domain:
    return Domain("custom", eta_builder, None, interior_sampler, {})


def whole_space(sample_scale: float = 0.4) -> Domain:
    """V = the whole space with exhaustion eta = ||z||^2 (Levi form = I).

    The boundary is empty, so the boundary distance is +infinity and d_V
    reduces to 1/||z||.  Numerically the tamest pseudo-convex arena: the
    exhaustion gradient sum is ||z||^2 itself.
    """

    def builder(n: int) -> CylinderFn:
        return CylinderFn(norm_sq_coords(n), dim=n)

    def bdist(pts: np.ndarray) -> np.ndarray:
        return np.full(len(np.atleast_2d(pts)), np.inf)

    def sampler(n: int, N: int, seed: int) -> np.ndarray:
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(6,)))
        return rng.standard_normal((N, 2 * n)) * sample_scale

    return Domain("whole_space", builder, bdist, sampler, {})


def _substitute(e: Expr, subs: dict) -> Expr:
    from . import symfun as sf

    if isinstance(e, sf.VarX):
        return subs.get(("x", e.i), e)
    if isinstance(e, sf.VarY):
        return subs.get(("y", e.i), e)
    if isinstance(e, sf.Const):
        return e
    if isinstance(e, sf.Add):
        return sf.add(*(_substitute(t, subs) for t in e.terms))
    if isinstance(e, sf.Mul):
        return sf.mul(*(_substitute(t, subs) for t in e.factors))
    if isinstance(e, sf.Div):
        return sf.div(_substitute(e.num, subs), _substitute(e.den, subs))
    if isinstance(e, sf.Pow):
        return sf.pw(_substitute(e.base, subs), e.k)
    if isinstance(e, sf.Fun):
        return sf._fun(e.name, _substitute(e.arg, subs))
    if isinstance(e, sf.BumpD):
        return sf.BumpD(_substitute(e.arg, subs), e.k)
    if isinstance(e, sf.CubicStepD):
        return sf.CubicStepD(_substitute(e.arg, subs), e.level, e.order)
    if isinstance(e, sf.GermStepD):
        return sf.GermStepD(_substitute(e.arg, subs), e.k)
    if isinstance(e, sf.Poly1):
        return sf.poly1(_substitute(e.arg, subs), e.coeffs)
    if isinstance(e, sf.Conj):
        return sf.conj_(_substitute(e.arg, subs))
    raise TypeError(type(e))


def complex_hessian(eta: CylinderFn, points: np.ndarray, n: int,
                    herm_tol: float = 1e-9) -> np.ndarray:
    """[del_i delbar_j eta] at each point: shape (P, n, n), Hermitian-checked."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    P = points.shape[0]
    H = np.empty((P, n, n), dtype=complex)
    for j in range(1, n + 1):
        dbj = delbar_op(eta, j)
        for i in range(1, n + 1):
            H[:, i - 1, j - 1] = del_op(dbj, i)(points)
    scale = max(1.0, float(np.max(np.abs(H))))
    dev = float(np.max(np.abs(H - np.conjugate(np.transpose(H, (0, 2, 1)))))) / scale
    if dev > herm_tol:
        raise ArithmeticError(
            f"complex Hessian deviates from Hermitian by {dev} (relative)")
    H = 0.5 * (H + np.conjugate(np.transpose(H, (0, 2, 1))))
    return H


def levi_min_eig(domain: Domain, point: np.ndarray, n: int) -> float:
    """Smallest eigenvalue of the complex Hessian of eta_n at the point."""
    return float(np.min(levi_min_eigs(domain, np.atleast_2d(point), n)))


def levi_min_eigs(domain: Domain, points: np.ndarray, n: int) -> np.ndarray:
    H = complex_hessian(domain.eta(n), points, n)
    return np.linalg.eigvalsh(H)[:, 0]


def normalize_eta(domain: Domain, n_probe: int = 3, samples: int = 10_000,
                  seed: int = 1234) -> Domain:
    """Shift to eta + ||z||^2 - inf_{V0} eta: nonnegative, Levi form gains +I.

    The infimum over V0 = {eta <= 0} is sample-estimated; the 10% safety
    margin shifts downward, which only enlarges the new eta and preserves
    every inequality it feeds.
    """
    eta = domain.eta(n_probe)
    pts = domain.sample_interior(n_probe, samples, seed)
    vals = np.real(eta(pts))
    sub = vals[vals <= 0.0]
    m_hat = float(np.min(sub)) if len(sub) else min(0.0, float(np.min(vals)))
    c_shift = m_hat - 0.1 * (1.0 + abs(m_hat))

    def builder(n: int) -> CylinderFn:
        base = domain.eta(n)
        return CylinderFn(add(base.expr, norm_sq_coords(n), const(-c_shift)), dim=n)

    return Domain(f"normalized({domain.kind})", builder, domain.boundary_distance,
                  domain.interior_sampler, dict(domain.params, shift=-c_shift))


def d_V(domain: Domain, point: np.ndarray) -> float:
    """min of the boundary distance and 1/||z|| (1/0 = +inf)."""
    point = np.asarray(point, dtype=float).reshape(1, -1)
    if domain.boundary_distance is None:
        raise ValueError(f"domain kind {domain.kind!r} has no boundary-distance rule")
    bd = float(domain.boundary_distance(point)[0])
    nrm = float(np.linalg.norm(point))
    inv = math.inf if nrm == 0.0 else 1.0 / nrm
    return min(bd, inv)


@dataclass
class InclusionReport:
    included: bool
    margin: float
    checked: int


def uniformly_included(domain: Domain, S, n: Optional[int] = None,
                       N: int = 2000, seed: int = 99) -> InclusionReport:
    """Uniform inclusion of a sample set or a sub-level set, with the margin.

    S is either an array of points or a sub-level threshold tau (float); the
    margin is the sampled infimum of d_V over S.
    """
    if isinstance(S, (int, float)):
        if n is None:
            raise ValueError("sub-level form needs the truncation dimension n")
        pts = domain.sample_sublevel(n, float(S), N, seed)
    else:
        pts = np.atleast_2d(np.asarray(S, dtype=float))
    if domain.boundary_distance is None:
        raise ValueError(f"domain kind {domain.kind!r} has no boundary-distance rule")
    bd = domain.boundary_distance(pts)
    nrm = np.linalg.norm(pts, axis=1)
    with np.errstate(divide="ignore"):
        inv = np.where(nrm == 0.0, np.inf, 1.0 / np.maximum(nrm, 1e-300))
    dvals = np.minimum(bd, inv)
    margin = float(np.min(dvals))
    return InclusionReport(included=margin > 0.0, margin=margin, checked=len(pts))
