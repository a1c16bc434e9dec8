"""Cut-off families, majorants, and the weight-construction pipeline.

The estimates need three ingredients built from the exhaustion function eta:

  * cut-offs X_k = h_k(eta) with the C^1 cubic step h_k (plateau 1 below k,
    0 above k+1, slope bounded by 3/2), plus the C-infinity germ variant;
  * a majorant psi with sum_i |dbar_i X_k|^2 <= e^psi, built as a smooth
    monotone staircase in eta through sampled sup-estimates of
    ln(1 + (9/4) sum_i |dbar_i eta|^2);
  * a convex real-analytic series majorant g with g'' >= g' >= g >= g0,
    from which the weight is phi = g(eta) and the triple is
    (w1, w2, w3) = (phi - 2 psi, phi - psi, phi).

Sup-estimates over sub-level sets are sampled and inflated by a safety
factor; every inequality they feed is monotone in the estimate, so
over-estimation is the safe direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .domains import Domain, complex_hessian, normalize_eta
from .forms import Form, support_mask
from .gaussmeasure import GaussianSpec, Quadrature
from .symfun import (CylinderFn, FnBase, add, conj_, const, cubic_step,
                     del_op, delbar_op, diff, eval_expr, germ_step, mul,
                     poly1, x)


# ---------------------------------------------------------------------------
# Cut-offs
# ---------------------------------------------------------------------------

@dataclass
class CutoffFamily:
    """The level-k cubic cut-off and, when eta is supplied, X_k = h_k(eta)."""

    k: int
    h: Callable[[np.ndarray], np.ndarray]
    h_prime: Callable[[np.ndarray], np.ndarray]
    X_k: Optional[CylinderFn] = None


def cutoff(k: int, eta: Optional[CylinderFn] = None) -> CutoffFamily:
    if k < 1:
        raise ValueError("cut-off level k must be >= 1")
    h_expr = cubic_step(x(1), k)
    hp_expr = diff(h_expr, "x", 1)

    def h(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        pts = np.zeros((len(t), 2))
        pts[:, 0] = t
        return np.real(eval_expr(h_expr, pts))

    def h_prime(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        pts = np.zeros((len(t), 2))
        pts[:, 0] = t
        return np.real(eval_expr(hp_expr, pts))

    X_k = None
    if eta is not None:
        X_k = CylinderFn(cubic_step(eta.expr, k), dim=eta.dim)
    return CutoffFamily(k=k, h=h, h_prime=h_prime, X_k=X_k)


def smooth_step(rho: float, eta: Optional[CylinderFn] = None):
    """The C-infinity cut-off h_rho(x) = germ(x - rho): 1 below rho, 0 above rho+1.

    Returns (h callable, eta_rho CylinderFn or None).
    """
    h_expr = germ_step(add(x(1), const(-rho)))

    def h(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        pts = np.zeros((len(t), 2))
        pts[:, 0] = t
        return np.real(eval_expr(h_expr, pts))

    eta_rho = None
    if eta is not None:
        eta_rho = CylinderFn(germ_step(add(eta.expr, const(-rho))), dim=eta.dim)
    return h, eta_rho


# ---------------------------------------------------------------------------
# The psi majorant
# ---------------------------------------------------------------------------

def dbar_eta_sq_sum(eta: CylinderFn, n: int) -> FnBase:
    """sum over i <= n of |dbar_i eta|^2 as a symbolic function."""
    terms = []
    for i in range(1, n + 1):
        d = delbar_op(eta, i)
        terms.append(mul(d.expr, conj_(d.expr)))
    return CylinderFn(add(*terms), dim=n)


@dataclass
class PsiReport:
    psi: CylinderFn
    levels: np.ndarray
    safety: float
    target: FnBase


def staircase_fn(levels: Sequence[float], eta: CylinderFn) -> CylinderFn:
    """Smooth monotone staircase H(eta): H >= levels[j] on {j < eta <= j+1}.

    levels[j] is the plateau reached at eta = j; the rise from levels[j-1] to
    levels[j] happens on (j-1, j) through the C-infinity germ, so the value on
    (j, j+1] is at least levels[j].  Requires nondecreasing levels.
    """
    lv = np.maximum.accumulate(np.asarray(levels, dtype=float))
    pieces = [const(lv[0])]
    for j in range(1, len(lv)):
        inc = lv[j] - lv[j - 1]
        if inc <= 0:
            continue
        rise = add(const(1.0), mul(const(-1), germ_step(add(eta.expr, const(-(j - 1))))))
        pieces.append(mul(const(inc), rise))
    return CylinderFn(add(*pieces), dim=eta.dim)


def psi_majorant(domain: Domain, trunc_dim: int, levels: int,
                 samples: int = 10_000, seed: int = 314, safety: float = 0.5) -> PsiReport:
    """psi = H(eta) with ln(1 + (9/4) sum_i |dbar_i eta|^2) <= psi on V_levels.

    The per-level sups of the target are sampled on V_{j+1} and inflated by
    the safety factor before the staircase interpolation.
    """
    eta = domain.eta(trunc_dim)
    grad_sq = dbar_eta_sq_sum(eta, trunc_dim)
    target_vals = lambda pts: np.log1p(2.25 * np.real(grad_sq(pts)))
    lv = np.empty(levels + 1)
    for j in range(levels + 1):
        pts = domain.sample_sublevel(trunc_dim, float(j + 1), samples, seed + j)
        lv[j] = (1.0 + safety) * float(np.max(target_vals(pts)))
    psi = staircase_fn(lv, eta)

    class _Target(FnBase):
        dim = trunc_dim
        support_radius = None

        def __call__(self, pts):
            return target_vals(pts).astype(complex)

    return PsiReport(psi=psi, levels=lv, safety=safety, target=_Target())


# ---------------------------------------------------------------------------
# Convex real-analytic majorant (series construction)
# ---------------------------------------------------------------------------

class TruncationError(ArithmeticError):
    pass


@dataclass
class ConvexMajorant:
    """Truncated power series g(x) = sum p_n x^n with g'' >= g' >= g >= g0."""

    p: np.ndarray            # ascending series coefficients p_n = prod_{i<=n} a_i
    a_seq: np.ndarray        # the factor sequence a_0, a_1, ...
    N_k: np.ndarray          # the exponent thresholds of the construction
    trunc_order: int
    K_max: float
    tail_bound: float

    def __call__(self, t):
        return np.polynomial.polynomial.polyval(np.asarray(t, dtype=float), self.p)

    def deriv(self, t, order: int = 1):
        c = self.p
        for _ in range(order):
            c = np.polynomial.polynomial.polyder(c)
        return np.polynomial.polynomial.polyval(np.asarray(t, dtype=float), c)

    def as_expr(self, child_expr):
        return poly1(child_expr, tuple(self.p))

    def compose(self, eta: CylinderFn) -> CylinderFn:
        return CylinderFn(self.as_expr(eta.expr), dim=eta.dim)


def convex_majorant(g0: Callable[[float], float], K_max: float,
                    trunc_order: int = 120) -> ConvexMajorant:
    """Series majorant of a nondecreasing g0 (internally clamped to >= 1).

    The factor sequence follows the threshold recursion
      N_k > max(ln(g0(k+1)) / ln(k/(k-1)), N_{k-1}),      N_1 = 1,
      a_0 = g0(2) e,  a_l = (1/k) g0(k+1)^(1/N_k) e^(1/sqrt(l))
    for l in [N_k, N_{k+1}); the partial products are the series coefficients.
    Raises TruncationError when the series tail at K_max exceeds 1e-9.
    """
    g0c = lambda v: max(1.0, float(g0(v)))
    N = [1]
    k = 2
    while N[-1] <= trunc_order:
        bound = max(math.log(g0c(k + 1)) / math.log(k / (k - 1.0)), float(N[-1]))
        N.append(int(math.floor(bound)) + 1)
        k += 1
    N_k = np.asarray(N, dtype=int)

    a = np.empty(trunc_order + 1)
    a[0] = g0c(2.0) * math.e
    for l in range(1, trunc_order + 1):
        kk = int(np.searchsorted(N_k, l, side="right"))  # N_kk <= l < N_{kk+1}
        a[l] = (1.0 / kk) * g0c(kk + 1.0) ** (1.0 / N_k[kk - 1]) * math.exp(1.0 / math.sqrt(l))

    log_p = np.cumsum(np.log(a))
    with np.errstate(under="ignore"):
        p = np.exp(log_p)
    # geometric tail bound at the widest evaluation point, in log space
    q = a[trunc_order] * K_max
    if q >= 1.0:
        raise TruncationError(
            f"series terms still grow at x = {K_max} (ratio {q:.3g}); raise trunc_order")
    log_tail = log_p[-1] + trunc_order * math.log(max(K_max, 1e-300)) \
        + math.log(q / (1.0 - q))
    tail = math.exp(log_tail) if log_tail < 700 else math.inf
    if not tail <= 1e-9:
        raise TruncationError(
            f"series tail {tail} at x = {K_max} exceeds 1e-9; raise trunc_order")
    return ConvexMajorant(p=p, a_seq=a, N_k=N_k, trunc_order=trunc_order,
                          K_max=K_max, tail_bound=tail)


# ---------------------------------------------------------------------------
# The C^2 majorant vanishing below x1 (piecewise-quintic steps)
# ---------------------------------------------------------------------------

class _SmoothStairs:
    """Monotone C^2 staircase: base plus quintic smoothsteps between knots.

    The rise carrying increment inc[j-1] lives on [r_{j-1}, r_j]; callers that
    need pointwise domination feed the increment one knot ahead so each
    plateau is already reached when its interval starts.
    """

    def __init__(self, knots: np.ndarray, increments: np.ndarray, base: float = 0.0):
        self.knots = np.asarray(knots, dtype=float)      # rises on [r_{j-1}, r_j]
        self.inc = np.asarray(increments, dtype=float)
        self.base = float(base)

    @staticmethod
    def _s(u, order):
        u = np.clip(u, 0.0, 1.0)
        if order == 0:
            return ((6.0 * u - 15.0) * u + 10.0) * u ** 3
        if order == 1:
            return ((30.0 * u - 60.0) * u + 30.0) * u ** 2
        if order == 2:
            return ((120.0 * u - 180.0) * u + 60.0) * u
        raise ValueError(order)

    @staticmethod
    def _s_int(u):
        """Antiderivative of the quintic smoothstep with value 0 at u = 0."""
        u = np.asarray(u, dtype=float)
        below = np.clip(u, 0.0, 1.0)
        core = u ** 4 * (u * (u - 3.0) + 2.5)  # integral of 6u^5-15u^4+10u^3
        core = np.where(u <= 0.0, 0.0, np.where(u >= 1.0, 0.5 + (u - 1.0), core))
        # for u in (0,1): u^6 - 3 u^5 + 2.5 u^4; at 1: 0.5
        mid = below ** 6 - 3.0 * below ** 5 + 2.5 * below ** 4
        return np.where(u >= 1.0, 0.5 + (u - 1.0), np.where(u <= 0.0, 0.0, mid))

    def val(self, t, order=0):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        if order == 0:
            out = out + self.base
        for j in range(1, min(len(self.knots), len(self.inc) + 1)):
            a, b = self.knots[j - 1], self.knots[j]
            width = b - a
            u = (t - a) / width
            out = out + self.inc[j - 1] * self._s(u, order) / width ** order
        return out

    def antideriv(self, t):
        t = np.asarray(t, dtype=float)
        out = self.base * np.maximum(t - self.knots[0], 0.0)
        for j in range(1, min(len(self.knots), len(self.inc) + 1)):
            a, b = self.knots[j - 1], self.knots[j]
            width = b - a
            out = out + self.inc[j - 1] * width * self._s_int((t - a) / width)
        return out


@dataclass
class CalculusG:
    """C^2 function with G = 0 below x1, G'' >= 0, G >= g, G' >= g."""

    stairs_h: _SmoothStairs
    base: float

    def __call__(self, t):
        return self.stairs_h.antideriv(t)

    def deriv(self, t):
        return self.stairs_h.val(t, order=0)

    def second(self, t):
        return self.stairs_h.val(t, order=1)


def calculus_G(g: Callable[[float], float], x1: float, x2: float,
               K_max: float = 20.0, density: int = 200) -> CalculusG:
    """The double-majorization construction for a nondecreasing g vanishing on [0, x2].

    Knot ladder r_0 = 0 < x1 < (x1+x2)/2 < x2 < x2+1 < ...; plateau levels are
    running sups of g, then of max(Phi', g); the result integrates the second
    staircase so that G' matches it exactly and G'' is its exact derivative.
    """
    if not (0.0 < x1 < x2):
        raise ValueError("need 0 < x1 < x2")
    probe = np.linspace(0.0, x2, 257)
    if max(float(g(t)) for t in probe) > 0.0:
        raise ValueError("g must vanish on the closed interval [0, x2]")
    knots = [0.0, x1, 0.5 * (x1 + x2), x2]
    step = max(1.0, (K_max - x2) / max(1, density // 10))
    v = x2
    while v < K_max + 2.0:
        v += step
        knots.append(v)
    knots = np.asarray(knots)

    def sup_on(fn, hi):
        grid = np.linspace(0.0, hi, max(8, int(density * hi / max(knots[-1], 1.0)) + 8))
        return float(np.max([fn(t) for t in grid]))

    def one_ahead(levels):
        """Stairs whose value on [r_j, r_{j+1}] is already levels[j+1]."""
        lv = np.maximum.accumulate(np.asarray(levels, dtype=float))
        return _SmoothStairs(knots[:-1], lv[2:] - lv[1:-1], base=lv[1])

    lam = [sup_on(g, r) for r in knots]
    phi_stairs = one_ahead(lam)

    def phi_prime(t):
        return float(phi_stairs.val(np.asarray([t]), order=1)[0])

    d = [sup_on(lambda t: max(phi_prime(t), float(g(t))), r) for r in knots]
    h_stairs = one_ahead(d)
    if h_stairs.base != 0.0:
        raise ValueError("g must vanish on [0, x2] for the vanishing-tail construction")
    return CalculusG(stairs_h=h_stairs, base=x1)


# ---------------------------------------------------------------------------
# Weight triples and the Condition-4 checker
# ---------------------------------------------------------------------------

@dataclass
class WeightTriple:
    w1: CylinderFn
    w2: CylinderFn
    w3: CylinderFn
    phi: CylinderFn
    psi: CylinderFn

    def pointwise_identity_dev(self, pts: np.ndarray) -> float:
        """max |w3 - w2 - psi| and |w2 - w1 - psi| at the points."""
        d1 = np.abs(self.w3(pts) - self.w2(pts) - self.psi(pts))
        d2 = np.abs(self.w2(pts) - self.w1(pts) - self.psi(pts))
        return float(max(np.max(d1), np.max(d2))) if len(d1) else 0.0


def weight_triple(phi: CylinderFn, psi: CylinderFn) -> WeightTriple:
    """(w1, w2, w3) = (phi - 2 psi, phi - psi, phi)."""
    return WeightTriple(
        w1=phi + (-2.0) * psi,
        w2=phi + (-1.0) * psi,
        w3=phi,
        phi=phi,
        psi=psi,
    )


def phi_from_eta(domain: Domain, majorant: ConvexMajorant, n: int) -> CylinderFn:
    return majorant.compose(domain.eta(n))


@dataclass
class Cond4Report:
    margin: float
    per_point: np.ndarray
    points: int

    @property
    def passed(self) -> bool:
        return self.margin >= 0.0


def check_cond4(phi: CylinderFn, psi: CylinderFn, domain: Domain, n: int,
                points: np.ndarray, spec: Optional[GaussianSpec] = None) -> Cond4Report:
    """Levi(phi) >= (2 sum_i |d_i psi|^2 + 2 e^psi - 1/2) I at each point."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    H = complex_hessian(phi, points, n)
    eigmin = np.linalg.eigvalsh(H)[:, 0]
    grad = np.zeros(points.shape[0])
    for i in range(1, n + 1):
        grad += np.abs(del_op(psi, i)(points)) ** 2
    bound = 2.0 * grad + 2.0 * np.exp(np.real(psi(points))) - 0.5
    per_point = eigmin - bound
    return Cond4Report(margin=float(np.min(per_point)), per_point=per_point,
                       points=len(per_point))


# ---------------------------------------------------------------------------
# Weight-for-target construction
# ---------------------------------------------------------------------------

def recipe_weights_whole_space(spec: GaussianSpec, tau_certify: float = 2.0,
                               margin: float = 1.25):
    """Numerically tame instance of the weight recipe on the whole space.

    eta = ||z||^2 makes ln(1 + (9/4) sum_i |dbar_i eta|^2) = ln(1 + 9/4 eta)
    an exact closed-form majorant, so psi needs no staircase; phi = kappa eta
    with kappa calibrated 25% above the curvature bound of the certified
    sub-level set, which makes check_cond4 pass with real margin while the
    weights stay inside double-precision range.

    Returns (triple, domain, kappa).
    """
    from .domains import whole_space
    from .symfun import log_

    n = spec.trunc_dim
    dom = whole_space()
    eta = dom.eta(n)
    psi = CylinderFn(log_(add(const(1.0), mul(const(2.25), eta.expr))), dim=n)
    # curvature bound 2 sum|d_i psi|^2 + 2 e^psi - 1/2 along eta = r^2
    r2 = np.linspace(0.0, tau_certify, 512)
    bound = 2.0 * (2.25 / (1.0 + 2.25 * r2)) ** 2 * r2 + 2.0 * (1.0 + 2.25 * r2) - 0.5
    kappa = margin * float(np.max(bound))
    phi = CylinderFn(mul(const(kappa), eta.expr), dim=n)
    return weight_triple(phi, psi), dom, kappa


@dataclass
class WeightRecipe:
    triple: WeightTriple
    majorant: ConvexMajorant
    domain: Domain
    b: np.ndarray
    m: np.ndarray
    psi_report: PsiReport
    g0_table: np.ndarray
    norm_w2_est: float


def weight_for_target(f: Form, domain: Domain, J_max: int, spec: GaussianSpec,
                      samples: int = 10_000, seed: int = 2718,
                      safety: float = 0.5, trunc_order: int = 120,
                      normalize: bool = True) -> WeightRecipe:
    """Build (phi, psi) for a given closed target form following the solvability recipe.

    Annulus masses m_j of the target give the summable sequence
    b_j = 2^-j / (1 + m_j); the staircase h accumulates |ln(1/b_j) + sup psi|;
    g0 = 1 + h + sup-estimate of (2 sum |d_i psi|^2 + 2 e^psi); the convex
    series majorant of g0 composes with eta into phi.
    """
    n = spec.trunc_dim
    dom = normalize_eta(domain, n_probe=n, seed=seed) if normalize else domain
    psi_rep = psi_majorant(dom, n, levels=J_max + 1, samples=samples,
                           seed=seed + 1, safety=safety)
    psi = psi_rep.psi
    eta = dom.eta(n)

    pts = dom.sample_interior(n, samples, seed + 2)
    eta_vals = np.real(eta(pts))
    total = np.zeros(pts.shape[0])
    for (I, J), fn in f.coeffs.items():
        c = f.family.coeff(I, J) if f.family is not None else 1.0
        total += c * np.abs(fn(pts)) ** 2

    m = np.empty(J_max + 1)
    for j in range(1, J_max + 2):
        mask = (eta_vals > j) & (eta_vals <= j + 1)
        m[j - 1] = float(np.mean(total * mask))
    b = np.array([2.0 ** (-(j + 1)) / (1.0 + m[j]) for j in range(J_max + 1)])

    psi_vals = np.real(psi(pts))
    grad_psi = np.zeros(pts.shape[0])
    for i in range(1, n + 1):
        grad_psi += np.abs(del_op(psi, i)(pts)) ** 2
    cond_target = 2.0 * grad_psi + 2.0 * np.exp(psi_vals)

    def sup_level(vals, tau):
        mask = eta_vals <= tau
        if not np.any(mask):
            return 0.0
        return (1.0 + safety) * float(np.max(vals[mask]))

    def sup_ann(vals, j):
        mask = (eta_vals > j) & (eta_vals <= j + 1)
        if not np.any(mask):
            return 0.0
        return (1.0 + safety) * float(np.max(vals[mask]))

    h_steps = np.cumsum([abs(math.log(1.0 / b[j]) + sup_ann(psi_vals, j + 1))
                         for j in range(J_max + 1)])

    # certified range: the staircase psi plateaus above level J_max+1 and all
    # audits run on sub-level sets, so the series only needs [0, J_max + 2]
    K_max = J_max + 2.0

    def g0(xv: float) -> float:
        h_val = 0.0 if xv <= 1.0 else h_steps[min(int(math.floor(xv)) - 1, J_max)]
        return 1.0 + h_val + sup_level(cond_target, math.ceil(max(xv, 1.0)))

    g0_table = np.array([g0(float(v)) for v in range(0, int(K_max) + 2)])
    maj = None
    order = trunc_order
    for _ in range(4):
        try:
            maj = convex_majorant(g0, K_max=K_max, trunc_order=order)
            break
        except TruncationError:
            order *= 2
    if maj is None:
        maj = convex_majorant(g0, K_max=K_max, trunc_order=order)
    phi = maj.compose(eta)
    triple = weight_triple(phi, psi)

    w2_vals = np.real(triple.w2(pts))
    mask_J = eta_vals <= (J_max + 1)
    norm_w2 = float(np.mean(total * np.exp(-w2_vals) * mask_J))

    return WeightRecipe(triple=triple, majorant=maj, domain=dom, b=b, m=m,
                        psi_report=psi_rep, g0_table=g0_table,
                        norm_w2_est=norm_w2)
