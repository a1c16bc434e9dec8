import math

import numpy as np
import pytest

from dbarl2 import symfun as sf
from dbarl2.symfun import (CylinderFn, EvalError, ParseError, bump, conj_,
                           del_op, delbar_op, delta_op, diff, eval_expr,
                           fd_check, parse, sigma_op, wirtinger)

from conftest import random_smooth_expr


def ev(text, pt):
    return eval_expr(parse(text), np.asarray(pt, dtype=float))[0]


class TestParser:
    def test_z_sugar(self):
        assert ev("z(1)^2", [1.0, 1.0]) == pytest.approx(2j)
        assert ev("zb(1)", [0.5, 0.25]) == pytest.approx(0.5 - 0.25j)

    def test_bump_values(self):
        assert ev("bump(x(1))", [0.0, 0.0]) == pytest.approx(math.exp(-1.0))
        assert ev("bump(x(1))", [2.0, 0.0]) == 0.0

    def test_index_zero_rejected(self):
        with pytest.raises(ParseError):
            parse("x(0)")

    def test_syntax_error_position(self):
        with pytest.raises(ParseError):
            parse("x(1) + * 2")

    def test_precedence_and_power(self):
        assert ev("2*x(1)^2+1", [3.0, 0.0]) == pytest.approx(19.0)
        assert ev("(x(1)+1)^2/2", [1.0, 0.0]) == pytest.approx(2.0)

    def test_funcs(self):
        assert ev("exp(0*x(1))", [5.0, 0.0]) == pytest.approx(1.0)
        assert ev("conj(z(1))", [0.3, 0.4]) == pytest.approx(0.3 - 0.4j)


class TestEval:
    def test_division_by_zero(self):
        with pytest.raises(EvalError):
            ev("1/x(1)", [0.0, 0.0])

    def test_log_nonpositive(self):
        with pytest.raises(EvalError):
            ev("log(x(1))", [-1.0, 0.0])

    def test_log_positive(self):
        assert ev("log(exp(x(1)))", [0.7, 0.0]) == pytest.approx(0.7)

    def test_vectorized_shape(self):
        pts = np.random.default_rng(0).normal(size=(50, 2))
        vals = eval_expr(parse("x(1)*y(1)"), pts)
        assert vals.shape == (50,)
        np.testing.assert_allclose(vals.real, pts[:, 0] * pts[:, 1])


class TestDerivatives:
    def test_product_rule(self):
        e = diff(parse("x(1)*x(2)"), "x", 1)
        pts = np.array([[1.0, 0, 5.0, 0]])
        assert eval_expr(e, pts)[0] == pytest.approx(5.0)

    def test_constant_derivative(self):
        assert sf._is_const(diff(sf.const(4.2), "y", 3), 0)

    def test_smooth_not_frechet_fixture(self):
        # truncated infinite product whose x_i-partials all equal 2 pi at (1/j)_j
        N = 5
        facs = []
        for j in range(1, N + 1):
            w = 2 * j * j * math.pi
            facs.append(sf.add(1, sf.mul(sf.pw(sf.x(j), 2),
                                         sf.sin_(sf.mul(sf.const(w), sf.x(j))))))
            facs.append(sf.add(1, sf.mul(sf.pw(sf.y(j), 2),
                                         sf.sin_(sf.mul(sf.const(w), sf.y(j))))))
        e = sf.mul(*facs)
        z0 = np.zeros(2 * N)
        for j in range(N):
            z0[2 * j] = 1.0 / (j + 1)
        for i in range(1, N + 1):
            d = eval_expr(diff(e, "x", i), z0)[0]
            assert d.real == pytest.approx(2 * math.pi, abs=1e-9)

    def test_fd_random_smooth(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            e = random_smooth_expr(rng, n_vars=2, depth=4)
            pt = rng.normal(scale=0.4, size=4)
            assert fd_check(e, pt, 1e-5) <= 1e-6

    def test_fd_exp(self):
        assert fd_check(parse("exp(x(1))"), np.array([0.0, 0.0]), 1e-5) <= 1e-9

    def test_fd_constant_exact(self):
        assert fd_check(sf.const(3.0), np.array([0.1, 0.2]), 1e-5) == 0.0


class TestWirtinger:
    def test_holomorphic_kernel(self):
        pts = np.random.default_rng(3).normal(size=(100, 12), scale=0.5)
        for i in range(1, 7):
            for j in range(1, 7):
                dz = delbar_op(CylinderFn(sf.z(j)), i)(pts)
                dzb = del_op(CylinderFn(sf.zb(j)), i)(pts)
                assert np.max(np.abs(dz)) <= 1e-14
                assert np.max(np.abs(dzb)) <= 1e-14

    def test_kronecker(self):
        pts = np.random.default_rng(4).normal(size=(50, 8), scale=0.5)
        for i in range(1, 5):
            for j in range(1, 5):
                v = delbar_op(CylinderFn(sf.zb(j)), i)(pts)
                expect = 1.0 if i == j else 0.0
                assert np.max(np.abs(v - expect)) <= 1e-14

    def test_wirtinger_pair(self):
        d, db = wirtinger(CylinderFn("x(1)^2"), 1)
        pts = np.array([[0.5, 0.2]])
        assert d(pts)[0] == pytest.approx(0.5)
        assert db(pts)[0] == pytest.approx(0.5)

    def test_delta_of_one(self):
        a = 0.25
        d = delta_op(CylinderFn("1"), 1, a)
        pts = np.array([[0.5, 0.1]])
        assert d(pts)[0] == pytest.approx(-(0.5 - 0.1j) / (2 * a * a))

    def test_sigma_reduces_to_delta(self):
        rng = np.random.default_rng(5)
        pts = rng.normal(size=(40, 2), scale=0.3)
        f = CylinderFn("sin(x(1))*y(1)")
        a = 0.25
        s = sigma_op(f, 1, a, CylinderFn("0"))
        d = delta_op(f, 1, a)
        np.testing.assert_allclose(s(pts), d(pts), atol=1e-15)

    def test_conj_involution(self):
        rng = np.random.default_rng(6)
        pts = rng.normal(size=(50, 4), scale=0.5)
        for _ in range(10):
            e = random_smooth_expr(rng, n_vars=2, depth=3)
            v1 = eval_expr(conj_(conj_(e)), pts)
            v0 = eval_expr(e, pts)
            assert np.max(np.abs(v1 - v0)) <= 1e-14


class TestSupport:
    def test_bump_support_enforced(self):
        f = CylinderFn("bump((x(1)^2+y(1)^2)/0.25)", support_radius=0.5)
        rng = np.random.default_rng(8)
        pts = rng.normal(size=(1000, 2))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        pts *= 0.5 + rng.random((1000, 1)) * 2.0
        assert np.max(np.abs(f(pts))) == 0.0

    def test_radius_combination(self):
        a = CylinderFn("bump(x(1))", support_radius=1.0)
        b = CylinderFn("bump(x(1)/2)", support_radius=2.0)
        assert (a * b).support_radius == 1.0
        assert (a + b).support_radius == 2.0
        assert (a * CylinderFn("x(2)")).support_radius == 1.0


class TestGerms:
    def test_cubic_step_midpoint(self):
        e = sf.cubic_step(sf.x(1), 2)
        assert ev_expr(e, 2.5) == pytest.approx(0.5)
        assert ev_expr(e, 2.0) == pytest.approx(1.0)
        assert ev_expr(e, 3.0) == pytest.approx(0.0)

    def test_germ_step_plateaus(self):
        e = sf.germ_step(sf.x(1))
        assert ev_expr(e, -1.0) == 1.0
        assert ev_expr(e, 2.0) == 0.0
        mid = ev_expr(e, 0.5)
        assert 0.0 < mid < 1.0

    def test_germ_derivative_matches_fd(self):
        e = sf.germ_step(sf.x(1))
        for t in (0.2, 0.5, 0.8):
            assert fd_check(e, np.array([t, 0.0]), 1e-6) <= 1e-8

    def test_bump_higher_derivatives_match_fd(self):
        e = diff(bump(sf.x(1)), "x", 1)
        for t in (0.0, 0.3, 0.7):
            assert fd_check(e, np.array([t, 0.0]), 1e-6) <= 1e-7


def ev_expr(e, t):
    return eval_expr(e, np.array([t, 0.0]))[0].real
