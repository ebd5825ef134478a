import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from axintensity.certificates import (CoercivityInputs, F, comparison_CF, constant_C, constant_M, extremal_ratio,
                                      find_dphi, g1, g1_prime, g1_second, gamma_sweep, gap_Delta, hardy_check,
                                      hardy_constant, hardy_harness, kummer_M, lower_bound_LB, random_trig_family,
                                      s_asymptote, supersolution_check, SupersolutionParams)
from axintensity.polar_grid import PolarGrid


class TestCoercivity:
    def test_F_origin(self):
        c = CoercivityInputs()
        expected = (1 - c.c_0) / math.sqrt((1 + c.c_plus) * (1 + c.c_minus))
        assert F(0, 0, 0) == pytest.approx(expected, rel=1e-15)
        assert F(0, 0, 0) == pytest.approx(0.99147, abs=1e-5)

    def test_F_domain(self):
        with pytest.raises(ValueError):
            F(-1.0, 0, 0)
        with pytest.raises(ValueError):
            F(0, 1.5, 0)

    def test_eta_zero_constants(self):
        c = CoercivityInputs(eta=0.0)
        assert c.c_0 == c.c_plus == c.c_minus == 0.0
        assert F(0, 0, 0, c) == 1.0

    def test_LB_is_infimum(self):
        c = CoercivityInputs()
        lb = lower_bound_LB(c)
        # independent dense grid: no sample may fall below the reported infimum
        s = np.concatenate([[0.0], np.geomspace(1e-4, 1e4, 400)])
        t = np.linspace(0, 1, 51)
        tau = np.linspace(0, 1, 21)
        vals = [F(si, ti, ui, c) for si in s[::8] for ti in t[::5] for ui in tau[::5]]
        assert lb.value <= min(vals) + 1e-12
        assert math.isinf(lb.s) or F(lb.s, lb.t, lb.tau, c) == pytest.approx(lb.value, rel=1e-12)
        assert lb.value <= s_asymptote(c)

    def test_reference_numbers(self):
        c = CoercivityInputs()
        lb = lower_bound_LB(c)
        assert lb.value == pytest.approx(0.888762, abs=1e-6)
        assert comparison_CF() == pytest.approx(2 * math.sqrt(2) * 0.61 / 1.99, rel=1e-15)
        assert gap_Delta(c) == pytest.approx(lb.value - comparison_CF(), rel=1e-12)

    def test_minimiser_on_boundary_t(self):
        lb = lower_bound_LB()
        assert lb.t == pytest.approx(1.0) and lb.tau == pytest.approx(0.0, abs=1e-9)

    def test_e_lower_bound(self):
        c = CoercivityInputs()
        assert c.e_lower_bound() == pytest.approx((0.73 + 1e-3 * math.pi / 2) / 0.61)
        assert c.e > c.e_lower_bound()

    def test_constants_C_M(self):
        c = CoercivityInputs()
        assert constant_C(c) == pytest.approx(math.sqrt(200))
        assert constant_M(c, 0.02) == pytest.approx(math.sqrt(200) / 0.02)
        with pytest.raises(ValueError):
            constant_M(c, -0.1)

    def test_gamma_window(self):
        rows = gamma_sweep(np.arange(0, 1.61, 0.05))
        g, lb, cf = rows.T
        inside = lb > cf
        assert inside[np.isclose(g, 0.6)].all()
        assert not inside[np.isclose(g, 0.0)].any() and not inside[np.isclose(g, 0.85)].any()
        # the window is one interval
        idx = np.flatnonzero(inside)
        assert np.all(np.diff(idx) == 1)
        # beyond gamma ~ 0.9 a factor turns negative and LB is undefined
        assert np.isnan(lb[g > 1.0]).all() and np.isfinite(cf).all()

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.0, 0.8))
    def test_LB_decreasing_in_gamma(self, gamma):
        a = lower_bound_LB(CoercivityInputs(gamma=gamma)).value
        b = lower_bound_LB(CoercivityInputs(gamma=gamma + 0.05)).value
        assert b <= a + 1e-9


class TestHardy:
    @pytest.mark.parametrize("gamma, p", [(0.0, 2), (0.2, 4), (0.99, 29)])
    def test_constant(self, gamma, p):
        assert hardy_constant(gamma, p) == pytest.approx(p / (p + gamma - 1))

    @pytest.mark.parametrize("gamma, p", [(0.0, 2.0), (0.2, 4.0), (0.99, 29.0)])
    def test_extremal_family_is_sharp(self, gamma, p):
        a_min = 1 - (1 - gamma) / p
        K = hardy_constant(gamma, p)
        for a in (a_min + 1e-3, a_min + 0.1, 2.0):
            ratio, bound = extremal_ratio(a, gamma, p)
            assert ratio == pytest.approx(1 / a, rel=1e-12) and ratio <= bound
        # approaching the admissibility limit the ratio saturates the constant
        assert extremal_ratio(a_min + 1e-6, gamma, p)[0] == pytest.approx(K, rel=1e-5)

    def test_extremal_inadmissible(self):
        with pytest.raises(ValueError):
            extremal_ratio(0.5, 0.0, 2.0)

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2**20), st.sampled_from([0.0, 0.2, 0.99]), st.sampled_from([2.0, 4.0, 29.0]))
    def test_random_nodal_fields(self, seed, gamma, p):
        g = PolarGrid(2.0, 6, 17)
        vals = np.random.default_rng(seed).normal(size=g.shape)
        vals[:, [0, -1]] = 0.0
        res = hardy_check(g.field(vals), gamma, 1e-3, p)
        assert all(r.passed for r in res.values())

    def test_callable_family(self):
        rng = np.random.default_rng(5)
        f, fp, fr = random_trig_family(rng)
        res = hardy_check(f, 0.2, 1e-3, 4.0, R=2.0, dfdphi=fp, dfdr=fr)
        assert set(res) == {"hardy", "poincare", "poincare_gradient"}
        assert all(r.passed and 0 < r.ratio <= 1 for r in res.values())

    def test_detects_violation(self):
        # f = 1 does not vanish on the walls: the Hardy side blows up against d_phi f = 0
        res = hardy_check(lambda r, p: 1.0 + 0 * r * p, 0.0, 0.0, 2.0, R=2.0,
                          dfdphi=lambda r, p: 0 * r * p)
        assert not res["hardy"].passed

    def test_rejects_nonvanishing_field(self):
        g = PolarGrid(2.0, 4, 9)
        with pytest.raises(ValueError):
            hardy_check(g.field(np.ones(g.shape)), 0.0, 0.0, 2.0)

    def test_harness(self):
        rep = hardy_harness(n=20, p_list=(2, 29), gamma_list=(0.0, 0.99), seed=3)
        assert rep.failures == 0 and len(rep.cases) == 4
        assert max(rep.max_ratio.values()) <= 1.0


class TestKummer:
    @settings(max_examples=60, deadline=None)
    @given(st.floats(-3, 5), st.floats(0.5, 4), st.floats(-30, 30))
    def test_against_mpmath(self, a, b, x):
        ref = float(mp.hyp1f1(a, b, x))
        assert kummer_M(a, b, x) == pytest.approx(ref, rel=1e-10, abs=1e-13 * max(1.0, math.exp(x)))

    def test_kummer_transformation(self):
        a, b, x = 1.2, 1.5, -4.0
        assert kummer_M(a, b, x) == pytest.approx(math.exp(x) * kummer_M(b - a, b, -x), rel=1e-14)

    def test_terminating(self):
        # a = -2: Laguerre-type polynomial 1 - 2x/b + x^2/(b (b+1))
        b, x = 1.5, 0.7
        assert kummer_M(-2, b, x) == pytest.approx(1 - 2 * x / b + x**2 / (b * (b + 1)), rel=1e-15)

    @pytest.mark.parametrize("args", [(1.0, 0.0, 1.0), (1.0, -2.0, 1.0), (1.0, 1.5, 60.0)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            kummer_M(*args)

    def test_term_budget(self):
        with pytest.raises(RuntimeError):
            kummer_M(1.0, 1.5, 40.0, max_terms=5)


@pytest.fixture(scope="module")
def d_phi():
    return find_dphi()


class TestSupersolution:
    def test_root(self, d_phi):
        assert d_phi == pytest.approx(0.1945, abs=5e-4)
        assert abs(g1_prime(np.pi / 2, d_phi)[0]) < 1e-9

    def test_g1_against_mpmath(self, d_phi):
        k = math.sqrt(1 - 4 * d_phi)
        a = 0.75 + 0.25 / k

        def ref(x):
            return mp.exp(-(1 + k) * x / 2) * mp.sqrt(x) * mp.hyp1f1(a, 1.5, k * x)

        for x in (0.01, 0.3, 1.0, np.pi / 2):
            assert g1(x, d_phi)[0] == pytest.approx(float(ref(x)), rel=1e-12)
            assert g1_prime(x, d_phi)[0] == pytest.approx(float(mp.diff(ref, x)), rel=1e-10)
            assert g1_second(x, d_phi)[0] == pytest.approx(float(mp.diff(ref, x, 2)), rel=1e-9)

    def test_angular_ode(self, d_phi):
        phi = np.linspace(1e-4, np.pi / 2, 200)
        lhs = g1_second(phi, d_phi) + (1 + 0.5 / phi) * g1_prime(phi, d_phi) + d_phi * g1(phi, d_phi)
        assert np.abs(lhs).max() < 1e-10 * np.abs(g1_second(phi, d_phi)).max()

    @pytest.mark.parametrize("eps", [0.3, 1 / 9])
    def test_all_checks(self, eps):
        rep = supersolution_check(eps=eps)
        assert rep["passed"], {k: v for k, v in rep["checks"].items() if not v}
        assert rep["D"] > 0.1

    def test_radial_pair(self):
        prm = SupersolutionParams(d_phi=0.1945)
        ap, am = prm.alpha_pm
        assert ap * am == pytest.approx(-prm.d_r) and ap + am == pytest.approx(prm.c_eps)

    @pytest.mark.parametrize("kw", [dict(eps=0.0), dict(eps=2.0), dict(R0=0.5), dict(R0=12.0)])
    def test_invalid_params(self, kw):
        with pytest.raises(ValueError):
            SupersolutionParams(d_phi=0.19, **kw)

    def test_kappa_domain(self):
        with pytest.raises(ValueError):
            g1(0.5, 0.3)
