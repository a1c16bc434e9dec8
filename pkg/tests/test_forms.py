import numpy as np
import pytest

from dbarl2 import forms as fm
from dbarl2 import gaussmeasure as gm
from dbarl2.forms import Form, inner, norm_sq, parse_form_literal
from dbarl2.multiindex import constant_family, multiplicative_family
from dbarl2.symfun import CylinderFn

from conftest import bump_fn, random_form


GH = gm.Quadrature("gauss_hermite", nodes_per_axis=10)
MC = gm.Quadrature("monte_carlo", N=50_000, seed=21)


class TestFormBasics:
    def test_degree_validation(self, fam):
        with pytest.raises(fm.DegreeError):
            Form((0, 1), {((1,), (1,)): CylinderFn("1")}, fam)

    def test_zero_coefficients_dropped(self, fam):
        f = Form((0, 1), {((), (1,)): CylinderFn("0")}, fam)
        assert f.is_zero()

    def test_add_and_scale(self, fam, spec2):
        g = bump_fn(1, 0.5)
        f = Form((0, 1), {((), (1,)): g}, fam)
        z = f + f.scale(-1.0)
        pts = gm.sample(spec2, 50, 3)
        assert np.max(np.abs(z.coeff((), (1,))(pts))) <= 1e-16
        assert f.scale(0.0).is_zero()

    def test_degree_mismatch_add(self, fam):
        f = Form((0, 1), {((), (1,)): CylinderFn("1")}, fam)
        g = Form((1, 0), {((1,), ()): CylinderFn("1")}, fam)
        with pytest.raises(fm.DegreeError):
            _ = f + g

    def test_support_radius(self, fam):
        f = Form((0, 1), {((), (1,)): bump_fn(1, 0.5),
                          ((), (2,)): bump_fn(2, 0.8)}, fam)
        assert f.support_radius() == 0.8
        g = Form((0, 1), {((), (1,)): CylinderFn("x(1)")}, fam)
        assert g.support_radius() is None


class TestContract:
    def test_identity_sign(self, fam):
        g = CylinderFn("x(1)")
        f = Form((0, 2), {((), (1, 2)): g}, fam)
        pts = np.random.default_rng(0).normal(size=(20, 4))
        np.testing.assert_allclose(f.contract((), 1, (2,))(pts), g(pts))

    def test_i_in_L_zero(self, fam):
        f = Form((0, 2), {((), (1, 2)): CylinderFn("x(1)")}, fam)
        assert f.contract((), 2, (2,)).is_zero()

    def test_reordering_sign(self, fam):
        # sign oracle: (1,3) -> (1,3) is even, (3,1) -> (1,3) is odd
        g = CylinderFn("y(2)")
        f = Form((0, 2), {((), (1, 3)): g}, fam)
        pts = np.random.default_rng(1).normal(size=(20, 6))
        np.testing.assert_allclose(f.contract((), 1, (3,))(pts), g(pts))
        np.testing.assert_allclose(f.contract((), 3, (1,))(pts), -g(pts))

    def test_at_most_one_match(self):
        # sum over K of |eps^K_{iL}| is at most 1 for entries up to 8
        from itertools import combinations

        from dbarl2.multiindex import epsilon
        for t in (0, 1, 2):
            for L in combinations(range(1, 9), t):
                for i in range(1, 9):
                    total = sum(abs(epsilon(i, L, K))
                                for K in combinations(range(1, 9), t + 1))
                    assert total <= 1


class TestNorm:
    def test_zero_form(self, fam, spec2):
        est = norm_sq(Form((0, 1), {}, fam), None, spec2, GH)
        assert est.mean == 0.0

    def test_moment_norm(self, fam, spec2):
        f = Form((0, 1), {((), (1,)): CylinderFn("x(1)")}, fam)
        est = norm_sq(f, None, spec2, GH)
        assert est.mean.real == pytest.approx(spec2.a(1) ** 2, rel=1e-12)

    def test_scaling_homogeneity(self, fam, spec2):
        f = Form((0, 1), {((), (1,)): bump_fn(2, 0.7, poly="x(2)")}, fam)
        n1 = norm_sq(f, None, spec2, GH).mean.real
        n2 = norm_sq(f.scale(2.0), None, spec2, GH).mean.real
        assert n2 == pytest.approx(4.0 * n1, rel=1e-12)

    def test_family_weighting(self, spec2):
        fam2 = multiplicative_family(mu=lambda j: float(j))
        f = Form((0, 1), {((), (2,)): CylinderFn("x(1)")}, fam2)
        est = norm_sq(f, None, spec2, GH)
        assert est.mean.real == pytest.approx(2.0 * spec2.a(1) ** 2, rel=1e-12)

    def test_weight_factor(self, fam, spec1):
        f = Form((0, 1), {((), (1,)): bump_fn(1, 1.6)}, fam)
        w = CylinderFn("x(1)^2+y(1)^2")
        quad = gm.Quadrature("gauss_hermite", nodes_per_axis=48)
        plain = norm_sq(f, None, spec1, quad).mean.real
        weighted = norm_sq(f, w, spec1, quad).mean.real
        assert 0 < weighted < plain

    def test_parallelogram_law(self, fam, spec2):
        rng = np.random.default_rng(5)
        f = random_form(rng, (0, 1), 2, 0.7, fam)
        g = random_form(rng, (0, 1), 2, 0.7, fam)
        quad = gm.Quadrature("gauss_hermite", nodes_per_axis=12)
        a = norm_sq(f + g, None, spec2, quad).mean.real
        b = norm_sq(f - g, None, spec2, quad).mean.real
        c = norm_sq(f, None, spec2, quad).mean.real
        d = norm_sq(g, None, spec2, quad).mean.real
        assert a + b == pytest.approx(2 * c + 2 * d, rel=1e-10)

    def test_inner_consistency(self, fam, spec2):
        f = Form((0, 1), {((), (1,)): bump_fn(2, 0.7, poly="x(1)")}, fam)
        est = inner(f, f, None, spec2, GH)
        nrm = norm_sq(f, None, spec2, GH)
        assert est.mean.real == pytest.approx(nrm.mean.real, rel=1e-12)
        assert abs(est.mean.imag) <= 1e-15


class TestFormLiteral:
    def test_parse_entries(self, fam, spec2):
        f = parse_form_literal(
            [{"I": [], "J": [1], "coeff": "x(1)"},
             {"I": [], "J": [2], "coeff": "y(2)^2", "support_radius": 2.0}],
            (0, 1), fam)
        assert set(f.coeffs) == {((), (1,)), ((), (2,))}
        assert f.coeffs[((), (2,))].support_radius == 2.0

    def test_duplicate_keys_accumulate(self, fam):
        f = parse_form_literal(
            [{"I": [], "J": [1], "coeff": "x(1)"},
             {"I": [], "J": [1], "coeff": "x(1)"}],
            (0, 1), fam)
        pts = np.array([[0.5, 0.0]])
        assert f.coeff((), (1,))(pts)[0] == pytest.approx(1.0)
