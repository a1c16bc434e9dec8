"""Gaussian product measure at finite truncation: sampling, quadrature, reduction.

The measure is the product over coordinates i of centered complex Gaussians
with scale a_i (x_i and y_i independent N(0, a_i^2)).  The default scale rule
a_i = 2^-(i+1) keeps the sum of the a_i below 1.  Two quadratures are
provided: seeded Monte Carlo (chunked so results do not depend on scheduling)
and deterministic tensor Gauss-Hermite with the Gaussian weight absorbed into
the nodes.

``reduce_fn`` integrates out the coordinates beyond a target dimension; the
tail integral is a tensor Gauss-Hermite rule, which is exact for polynomial
tail dependence, with a Monte Carlo fallback when the tail is too wide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .symfun import CylinderFn, FnBase, _as_fn

_SAMPLE_CHUNK = 1 << 16
_GH_BUDGET = 2_000_000
_TAIL_BUDGET = 200_000
_TAIL_MC = 4096


def default_a(i: int) -> float:
    return 2.0 ** (-(i + 1))


@dataclass(frozen=True)
class GaussianSpec:
    """Scale sequence and truncation dimension of the product measure."""

    trunc_dim: int
    a_rule: Callable[[int], float] = default_a

    def __post_init__(self):
        if self.trunc_dim < 1:
            raise ValueError("trunc_dim must be >= 1")
        for i in range(1, self.trunc_dim + 1):
            if not self.a_rule(i) > 0:
                raise ValueError(f"a_{i} must be positive")

    def a(self, i: int) -> float:
        return self.a_rule(i)

    def sigma_cols(self, n: Optional[int] = None) -> np.ndarray:
        """Per-column standard deviations (x1, y1, x2, y2, ...)."""
        n = self.trunc_dim if n is None else n
        out = np.empty(2 * n)
        for i in range(1, n + 1):
            out[2 * i - 2] = out[2 * i - 1] = self.a(i)
        return out


@dataclass(frozen=True)
class MCEstimate:
    mean: complex
    stderr: float
    samples: int
    seed: Optional[int] = None

    @property
    def real(self) -> float:
        return self.mean.real


@dataclass(frozen=True)
class Quadrature:
    """kind = "monte_carlo" (N, seed) or "gauss_hermite" (nodes_per_axis)."""

    kind: str = "monte_carlo"
    N: int = 100_000
    seed: int = 0
    nodes_per_axis: int = 8

    @property
    def deterministic(self) -> bool:
        return self.kind == "gauss_hermite"

    def nodes_weights(self, spec: GaussianSpec, n: Optional[int] = None):
        """Materialize points (M, 2n) and weights (M,); weights sum to 1."""
        n = spec.trunc_dim if n is None else n
        if self.kind == "monte_carlo":
            pts = sample(spec, self.N, self.seed, n=n)
            w = np.full(self.N, 1.0 / self.N)
            return pts, w
        if self.kind == "gauss_hermite":
            m = self.nodes_per_axis
            if m ** (2 * n) > _GH_BUDGET:
                raise ValueError(
                    f"gauss_hermite with {m} nodes in {2 * n} real dims exceeds "
                    f"the {_GH_BUDGET} node budget; use monte_carlo")
            t, w1 = np.polynomial.hermite.hermgauss(m)
            sig = spec.sigma_cols(n)
            axes_nodes = [math.sqrt(2.0) * sig[c] * t for c in range(2 * n)]
            axes_w = [w1 / math.sqrt(math.pi)] * (2 * n)
            grids = np.meshgrid(*axes_nodes, indexing="ij")
            pts = np.stack([g.reshape(-1) for g in grids], axis=1)
            wg = np.meshgrid(*axes_w, indexing="ij")
            w = np.ones(pts.shape[0])
            for g in wg:
                w = w * g.reshape(-1)
            return pts, w
        raise ValueError(f"unknown quadrature kind {self.kind!r}")


def sample(spec: GaussianSpec, N: int, seed: int, n: Optional[int] = None) -> np.ndarray:
    """N points in R^(2n); deterministic per (seed, N, n) and chunk-stable."""
    if N < 1:
        raise ValueError("N must be >= 1")
    n = spec.trunc_dim if n is None else n
    sig = spec.sigma_cols(n)
    blocks = []
    for c in range(0, N, _SAMPLE_CHUNK):
        m = min(_SAMPLE_CHUNK, N - c)
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                           spawn_key=(c // _SAMPLE_CHUNK,)))
        blocks.append(rng.standard_normal((m, 2 * n)) * sig)
    return np.concatenate(blocks, axis=0) if len(blocks) > 1 else blocks[0]


def _estimate(vals: np.ndarray, w: np.ndarray, deterministic: bool,
              seed: Optional[int]) -> MCEstimate:
    mean = complex(np.sum(w * vals))
    if deterministic:
        return MCEstimate(mean=mean, stderr=0.0, samples=len(vals), seed=None)
    N = len(vals)
    dev = vals - mean
    var = float(np.sum(np.abs(dev) ** 2)) / max(N - 1, 1)
    return MCEstimate(mean=mean, stderr=math.sqrt(var / N), samples=N, seed=seed)


def integrate(f: Union[FnBase, Callable], spec: GaussianSpec, quad: Quadrature,
              n: Optional[int] = None) -> MCEstimate:
    """Integral of f against the truncated product measure."""
    fn = _as_fn(f) if not callable(f) or isinstance(f, FnBase) else f
    if isinstance(fn, FnBase) and fn.dim > (spec.trunc_dim if n is None else n):
        raise ValueError(f"integrand dim {fn.dim} exceeds truncation {spec.trunc_dim}")
    pts, w = quad.nodes_weights(spec, n=n)
    vals = np.asarray(fn(pts))
    return _estimate(vals, w, quad.deterministic, getattr(quad, "seed", None))


def paired_residual(vals_a: np.ndarray, vals_b: np.ndarray, w: np.ndarray,
                    deterministic: bool) -> MCEstimate:
    """Estimate of integral(a - b) with the variance of the paired difference."""
    return _estimate(np.asarray(vals_a) - np.asarray(vals_b), w, deterministic, None)


class ReducedFn(FnBase):
    """Partial integral of ``f`` over coordinates beyond ``n`` (tail quadrature).

    Exact for polynomial tail dependence when the tail rule is Gauss-Hermite.
    Derivatives commute with the tail integral, so d_dx defers to the source.
    """

    def __init__(self, f: FnBase, n: int, tail_pts: np.ndarray, tail_w: np.ndarray):
        self.f = f
        self.dim = n
        self.support_radius = f.support_radius
        self._tail_pts = tail_pts
        self._tail_w = tail_w

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        N = pts.shape[0]
        head = pts[:, :2 * self.dim]
        out = np.zeros(N, dtype=complex)
        full = np.empty((N, 2 * self.f.dim))
        full[:, :2 * self.dim] = head
        for t in range(self._tail_pts.shape[0]):
            full[:, 2 * self.dim:] = self._tail_pts[t]
            out += self._tail_w[t] * self.f(full)
        return out

    def d_dx(self, i: int) -> "ReducedFn":
        if i > self.dim:
            raise ValueError("derivative index beyond the reduced dimension")
        return ReducedFn(self.f.d_dx(i), self.dim, self._tail_pts, self._tail_w)

    def d_dy(self, i: int) -> "ReducedFn":
        if i > self.dim:
            raise ValueError("derivative index beyond the reduced dimension")
        return ReducedFn(self.f.d_dy(i), self.dim, self._tail_pts, self._tail_w)

    def conj(self) -> "ReducedFn":
        return ReducedFn(self.f.conj(), self.dim, self._tail_pts, self._tail_w)


def reduce_fn(f: FnBase, n: int, spec: GaussianSpec,
              tail_nodes: int = 8, tail_seed: int = 7_000_001) -> FnBase:
    """f integrated over the coordinates beyond n; returns f itself when it
    already lives in dimension <= n."""
    f = _as_fn(f)
    if f.dim <= n:
        return f
    m = f.dim
    tail_cols = 2 * (m - n)
    tail_sig = spec.sigma_cols(m)[2 * n:]
    if tail_nodes ** tail_cols <= _TAIL_BUDGET:
        t, w1 = np.polynomial.hermite.hermgauss(tail_nodes)
        axes = [math.sqrt(2.0) * s * t for s in tail_sig]
        grids = np.meshgrid(*axes, indexing="ij")
        tail_pts = np.stack([g.reshape(-1) for g in grids], axis=1)
        wts = np.meshgrid(*([w1 / math.sqrt(math.pi)] * tail_cols), indexing="ij")
        tail_w = np.ones(tail_pts.shape[0])
        for g in wts:
            tail_w = tail_w * g.reshape(-1)
    else:
        rng = np.random.default_rng(np.random.SeedSequence(entropy=tail_seed,
                                                           spawn_key=(m, n)))
        tail_pts = rng.standard_normal((_TAIL_MC, tail_cols)) * tail_sig
        tail_w = np.full(_TAIL_MC, 1.0 / _TAIL_MC)
    return ReducedFn(f, n, tail_pts, tail_w)


@dataclass(frozen=True)
class GaussGreenReport:
    lhs: complex
    rhs: complex
    residual: float
    stderr: float

    @property
    def passed(self) -> bool:
        if self.stderr == 0.0:
            return self.residual <= 1e-8
        return self.residual <= 3.0 * self.stderr


def gauss_green_residual(f: FnBase, m: int, spec: GaussianSpec,
                         quad: Quadrature) -> GaussGreenReport:
    """Residual of: integral of D_{x_m} f  equals  integral of (x_m/a_m^2) f.

    Both sides share one point set, so the reported stderr is that of the
    paired difference.
    """
    f = _as_fn(f)
    if m > spec.trunc_dim:
        raise ValueError("m exceeds the truncation dimension")
    pts, w = quad.nodes_weights(spec)
    la = f.d_dx(m)(pts)
    rb = (pts[:, 2 * (m - 1)] / spec.a(m) ** 2) * f(pts)
    lhs = complex(np.sum(w * la))
    rhs = complex(np.sum(w * rb))
    est = paired_residual(la, rb, w, quad.deterministic)
    return GaussGreenReport(lhs=lhs, rhs=rhs, residual=abs(est.mean), stderr=est.stderr)
