"""Mollification on the reduced finite-dimensional slice and the approximation pipeline.

The mollifier is the radial bump profile on C^n normalized to unit Lebesgue
mass; convolution runs on a uniform grid (n in {1, 2}, so 2 or 4 real
dimensions) via FFT.  Mollified coefficients come back as grid-backed
functions with stencil first derivatives, flagged approximate; the pipeline
composes reduce -> mollify -> multiply by the smooth cut-off eta_rho and
reports the weighted-norm error ladder over (n, delta).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate as spint
from scipy.signal import fftconvolve

from .domains import Domain
from .forms import Form, support_mask
from .gaussmeasure import GaussianSpec, Quadrature, reduce_fn
from .symfun import CylinderFn, FnBase, add, bump, const, germ_step, mul, _as_fn


def _ball_surface(d: int) -> float:
    """Surface area of the unit sphere in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


@dataclass
class Mollifier:
    """Radial unit-mass bump kernel on C^n, scalable to width delta."""

    n: int
    norm_const: float  # gamma_n = norm_const * bump(|z|)

    def level(self, radii: np.ndarray) -> np.ndarray:
        r = np.asarray(radii, dtype=float)
        out = np.zeros_like(r)
        inside = np.abs(r) < 1.0
        om = 1.0 - r[inside] ** 2
        good = om > 1e-6
        vals = np.zeros(inside.sum())
        vals[good] = np.exp(-1.0 / om[good])
        out[inside] = self.norm_const * vals
        return out

    def scaled(self, pts: np.ndarray, delta: float) -> np.ndarray:
        """gamma_{n,delta}(z) = delta^(-2n) gamma_n(z/delta) at real points (N, 2n)."""
        r = np.linalg.norm(pts, axis=1) / delta
        return self.level(r) / delta ** (2 * self.n)

    def mass_quadrature(self) -> float:
        """Unit-mass audit via high-resolution radial quadrature."""
        d = 2 * self.n
        surf = _ball_surface(d)
        val, _ = spint.quad(lambda r: math.exp(-1.0 / (1.0 - r * r)) * r ** (d - 1),
                            0.0, 1.0, epsabs=1e-13, epsrel=1e-13)
        return self.norm_const * surf * val


def mollifier(n: int) -> Mollifier:
    if n < 1:
        raise ValueError("n must be >= 1")
    d = 2 * n
    surf = _ball_surface(d)
    val, _ = spint.quad(lambda r: math.exp(-1.0 / (1.0 - r * r)) * r ** (d - 1),
                        0.0, 1.0, epsabs=1e-13, epsrel=1e-13)
    return Mollifier(n=n, norm_const=1.0 / (surf * val))


class ResolutionError(ValueError):
    pass


class GridFn(FnBase):
    """Values on a uniform grid over [-L, L]^(2n) with multilinear interpolation.

    First derivatives are central-difference stencils on the grid, flagged
    approximate: they feed only the reported ladders, never an exact identity.
    """

    approximate_derivatives = True

    def __init__(self, values: np.ndarray, extent: float, n: int,
                 support_radius: Optional[float] = None):
        self.values = np.asarray(values, dtype=complex)
        self.extent = float(extent)
        self.dim = n
        self.shape = self.values.shape
        self.h = 2.0 * self.extent / (self.shape[0] - 1)
        self.support_radius = support_radius if support_radius is not None else \
            self.extent * math.sqrt(2 * n)

    def axes(self) -> np.ndarray:
        return np.linspace(-self.extent, self.extent, self.shape[0])

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        q = pts[:, :2 * self.dim]
        m = self.shape[0]
        u = (q + self.extent) / self.h
        out = np.zeros(len(q), dtype=complex)
        inside = np.all((u >= 0.0) & (u <= m - 1), axis=1)
        if not np.any(inside):
            return out
        ui = u[inside]
        base = np.floor(ui).astype(int)
        base = np.minimum(base, m - 2)
        frac = ui - base
        d = 2 * self.dim
        acc = np.zeros(int(inside.sum()), dtype=complex)
        for corner in range(1 << d):
            w = np.ones(len(ui))
            idx = []
            for ax in range(d):
                bit = (corner >> ax) & 1
                w = w * (frac[:, ax] if bit else 1.0 - frac[:, ax])
                idx.append(base[:, ax] + bit)
            acc += w * self.values[tuple(idx)]
        out[inside] = acc
        return out

    def _stencil(self, axis: int) -> "GridFn":
        g = np.gradient(self.values, self.h, axis=axis)
        return GridFn(g, self.extent, self.dim, self.support_radius)

    def d_dx(self, i: int) -> "GridFn":
        return self._stencil(2 * (i - 1))

    def d_dy(self, i: int) -> "GridFn":
        return self._stencil(2 * (i - 1) + 1)

    def conj(self) -> "GridFn":
        return GridFn(np.conjugate(self.values), self.extent, self.dim,
                      self.support_radius)

    def is_zero(self) -> bool:
        return not np.any(self.values)


def fn_to_grid(f: FnBase, n: int, extent: float, grid_res: int) -> GridFn:
    f = _as_fn(f)
    axes = [np.linspace(-extent, extent, grid_res)] * (2 * n)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.reshape(-1) for g in mesh], axis=1)
    vals = f(pts).reshape([grid_res] * (2 * n))
    return GridFn(vals, extent, n, f.support_radius)


def mollify(f_n: FnBase, delta: float, grid_res: int = 121,
            spec: Optional[GaussianSpec] = None) -> GridFn:
    """Convolution with the width-delta mollifier on a uniform grid.

    Needs a compactly supported input in dimension n <= 2 (grid convolution).
    The sampled kernel is renormalized to unit discrete mass, which removes
    the sampling bias; the continuum unit-mass audit lives on the Mollifier.
    """
    f_n = _as_fn(f_n)
    n = f_n.dim
    if n > 2:
        raise ResolutionError("grid convolution supports n <= 2 complex dimensions")
    if f_n.support_radius is None:
        raise ResolutionError("mollify needs a compactly supported input")
    if not 0 < delta:
        raise ValueError("delta must be positive")
    R = f_n.support_radius
    extent = R + delta + 4.0 * delta / max(grid_res, 8)
    grid = fn_to_grid(f_n, n, extent, grid_res)
    h = grid.h
    if h > delta / 2.0:
        raise ResolutionError(
            f"grid spacing {h:.4g} too coarse for delta = {delta}; raise grid_res")
    m = mollifier(n)
    half = int(math.ceil(delta / h))
    k_axes = [np.arange(-half, half + 1) * h] * (2 * n)
    mesh = np.meshgrid(*k_axes, indexing="ij")
    kpts = np.stack([g.reshape(-1) for g in mesh], axis=1)
    kern = m.scaled(kpts, delta).reshape([2 * half + 1] * (2 * n))
    kern = kern / kern.sum()
    out = fftconvolve(grid.values, kern.astype(complex), mode="same")
    # support arithmetic is exact: kill FFT roundoff outside radius R + delta
    axes = np.linspace(-extent, extent, grid_res)
    mesh = np.meshgrid(*([axes] * (2 * n)), indexing="ij")
    rad_sq = np.zeros_like(mesh[0])
    for g in mesh:
        rad_sq += g * g
    out[rad_sq > (R + delta) ** 2] = 0.0
    return GridFn(out, extent, n, support_radius=R + delta)


def l2_gauss_grid(values_fn, grid: GridFn, spec: GaussianSpec) -> float:
    """Grid quadrature of |values|^2 against the Gaussian density."""
    n = grid.dim
    axes = grid.axes()
    mesh = np.meshgrid(*([axes] * (2 * n)), indexing="ij")
    dens = np.ones_like(mesh[0])
    for i in range(1, n + 1):
        a = spec.a(i)
        dens = dens * np.exp(-(mesh[2 * i - 2] ** 2 + mesh[2 * i - 1] ** 2) / (2 * a * a)) \
            / (2 * math.pi * a * a)
    vol = grid.h ** (2 * n)
    return float(np.sum(np.abs(values_fn) ** 2 * dens) * vol)


@dataclass
class MollifierAudit:
    mass_deviation: float
    exterior_max: float
    radial_deviation: float


def audit_mollifier(n: int, grid_res: int = 61, seed: int = 5) -> MollifierAudit:
    """Unit mass, support containment, and radiality of the kernel."""
    m = mollifier(n)
    mass_dev = abs(m.mass_quadrature() - 1.0)
    rng = np.random.default_rng(seed)
    pts_out = rng.standard_normal((1000, 2 * n))
    pts_out /= np.linalg.norm(pts_out, axis=1, keepdims=True)
    pts_out *= 1.0 + rng.random((1000, 1))
    ext = float(np.max(np.abs(m.scaled(pts_out, 1.0))))
    v = rng.standard_normal((500, 2 * n))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    radii = rng.random(500) ** (1.0 / (2 * n))
    base = m.level(radii)
    rotated = m.scaled(v * radii[:, None], 1.0)
    rad_dev = float(np.max(np.abs(base - rotated)))
    return MollifierAudit(mass_deviation=mass_dev, exterior_max=ext,
                          radial_deviation=rad_dev)


def convolution_adjoint_residual(f: FnBase, g: FnBase, n: int, delta: float,
                                 spec: GaussianSpec, grid_res: int = 121) -> float:
    """Residual of the convolution-transpose identity under the Gaussian measure.

    integral f_{n,delta} g dP  ==  integral f phi_n^{-1} (g_n phi_n)_{n,delta} dP,
    with phi_n the Gaussian density of the first n coordinates.  Both sides by
    grid quadrature with a shared kernel.
    """
    f = _as_fn(f)
    g = _as_fn(g)
    if f.dim > n or g.dim > n:
        f = reduce_fn(f, n, spec)
        g = reduce_fn(g, n, spec)
    Rf = f.support_radius if f.support_radius is not None else 1.0
    Rg = g.support_radius if g.support_radius is not None else 1.0
    extent = max(Rf, Rg) + delta + 0.05
    res = grid_res

    axes = np.linspace(-extent, extent, res)
    mesh = np.meshgrid(*([axes] * (2 * n)), indexing="ij")
    pts = np.stack([mm.reshape(-1) for mm in mesh], axis=1)
    h = axes[1] - axes[0]
    vol = h ** (2 * n)

    dens = np.ones(pts.shape[0])
    for i in range(1, n + 1):
        a = spec.a(i)
        dens *= np.exp(-(pts[:, 2 * i - 2] ** 2 + pts[:, 2 * i - 1] ** 2) / (2 * a * a)) \
            / (2 * math.pi * a * a)

    shape = [res] * (2 * n)
    m = mollifier(n)
    half = int(math.ceil(delta / h))
    k_axes = [np.arange(-half, half + 1) * h] * (2 * n)
    kmesh = np.meshgrid(*k_axes, indexing="ij")
    kpts = np.stack([mm.reshape(-1) for mm in kmesh], axis=1)
    kern = m.scaled(kpts, delta).reshape([2 * half + 1] * (2 * n))
    kern = (kern / kern.sum()).astype(complex)

    fv = f(pts).reshape(shape)
    gv = g(pts).reshape(shape)
    dv = dens.reshape(shape)

    f_moll = fftconvolve(fv, kern, mode="same")
    lhs = np.sum(f_moll * gv * dv) * vol
    g_weighted = fftconvolve(gv * dv, kern, mode="same")
    rhs = np.sum(fv * g_weighted) * vol
    return float(abs(lhs - rhs))


@dataclass
class LadderRow:
    n: int
    delta: float
    norm_error: float
    stderr: float


@dataclass
class PipelineReport:
    output: Form
    ladder: list
    rho: float

    def write_csv(self, path: str):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "delta", "norm_error", "stderr"])
            for row in self.ladder:
                w.writerow([row.n, f"{row.delta!r}", f"{row.norm_error!r}",
                            f"{row.stderr!r}"])


def approx_pipeline(f: Form, domain: Domain, rho: float, n_ladder: Sequence[int],
                    delta_ladder: Sequence[float], spec: GaussianSpec,
                    w2: Optional[FnBase] = None, quad: Optional[Quadrature] = None,
                    grid_res: int = 101) -> PipelineReport:
    """Coefficient-wise reduce -> mollify -> multiply by the cut-off eta_rho.

    Reports the weighted norm of (eta_rho f_{n,delta} - f) over the requested
    (n, delta) ladder; the final output uses the last ladder entry.
    """
    if f.support_radius() is None:
        raise ValueError("the pipeline needs a compactly supported form")
    quad = quad or Quadrature("monte_carlo", N=20_000, seed=404)
    eta = domain.eta(spec.trunc_dim)
    eta_rho = CylinderFn(germ_step(add(eta.expr, const(-rho))), dim=eta.dim)

    pts, wq = quad.nodes_weights(spec)
    w2_vals = None
    if w2 is not None:
        w2 = _as_fn(w2)

    ladder = []
    final = None
    for n in n_ladder:
        for delta in delta_ladder:
            coeffs = {}
            for key, fn in f.coeffs.items():
                red = reduce_fn(fn, n, spec)
                mol = mollify(red, delta, grid_res=grid_res, spec=spec)
                coeffs[key] = eta_rho * mol
            cand = Form(f.degree, coeffs, f.family)
            total = np.zeros(pts.shape[0])
            for key in set(f.coeffs) | set(cand.coeffs):
                c = f.family.coeff(*key) if f.family is not None else 1.0
                dv = cand.coeff(*key)(pts) - f.coeff(*key)(pts)
                total += c * np.abs(dv) ** 2
            if w2 is not None:
                rads = [fn.support_radius for fn in
                        list(f.coeffs.values()) + list(cand.coeffs.values())]
                radius = None if any(r is None for r in rads) else max(rads)
                mask = support_mask(pts, radius, max(f.max_dim(), cand.max_dim()))
                weighted = np.zeros_like(total)
                if mask is None:
                    weighted = total * np.exp(-np.real(w2(pts)))
                elif np.any(mask):
                    weighted[mask] = total[mask] * np.exp(-np.real(w2(pts[mask])))
                total = weighted
            mean = float(np.sum(wq * total))
            if quad.deterministic:
                se = 0.0
            else:
                se = float(np.std(total) / math.sqrt(len(total)))
            ladder.append(LadderRow(n=n, delta=delta,
                                    norm_error=math.sqrt(max(mean, 0.0)), stderr=se))
            final = cand
    return PipelineReport(output=final, ladder=ladder, rho=rho)
