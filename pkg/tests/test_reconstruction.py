import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from axintensity.analytic_data import ZeroData
from axintensity.polar_grid import PolarGrid, ScalarField
from axintensity.reconstruction import (MeridionalField, PathIndependenceError, field_from_pq, integrate_wp,
                                        wp_gradients)
from axintensity.verification import field_error

from conftest import dipole_field, monopole_field, solved


class TestTraceConstants:
    @pytest.mark.parametrize("name, expected_I0", [("monopole", 1 / 16), ("dipole", 1 / 64)])
    def test_outer_scale(self, name, expected_I0):
        s = solved(name)
        assert s.I0 == pytest.approx(expected_I0, rel=2e-3)

    def test_inner_anchor(self, dip):
        assert np.all(dip.wp.values[0] == 0.0)

    def test_monopole_log_profile(self, mono):
        # u = 0 and x = -2 phi give d_r wp = -2/r, so wp = -2 ln r up to the trapezoid
        # error h^2/12 int |(2/r)''| dr = (h^2/6)(1 - 1/R^2)
        g = mono.grid
        Rm, _ = g.mesh()
        h = g.r_nodes[1] - g.r_nodes[0]
        bound = h**2 / 6 * (1 - 1 / g.R**2)
        assert np.abs(mono.wp.values + 2 * np.log(Rm)).max() <= 1.01 * bound
        assert mono.consts.wp_SR_dev < 1e-12 and mono.consts.path_residual < 1e-12

    @pytest.mark.parametrize("name", ["dipole", "zero_pair"])
    def test_boundary_trace_constancy_order(self, name):
        sizes = [(32, 64), (64, 128), (128, 256)]
        dev_R = np.array([solved(name, *n).consts.wp_SR_dev for n in sizes])
        dev_1 = np.array([solved(name, *n).consts.wp_S1_dev for n in sizes])
        assert np.all(np.log2(dev_R[:-1] / dev_R[1:]) >= 0.9)
        assert np.all(np.log2(dev_1[:-1] / dev_1[1:]) >= 0.9)

    def test_path_residual_small(self, dip):
        assert dip.consts.path_residual < 0.05

    def test_path_check_raises(self, dip):
        with pytest.raises(PathIndependenceError):
            integrate_wp(dip.u, dip.data.omega, dip.data.bd, dip.zd.ro, max_path_residual=1e-12)

    def test_gradients_finite_at_walls(self, zpair):
        dr, dp = wp_gradients(zpair.u, zpair.data.omega)
        assert np.all(np.isfinite(dr)) and np.all(np.isfinite(dp))
        assert np.allclose(dp[:, [0, -1]], 0.0)


class TestField:
    def test_monopole(self, mono):
        c, err = field_error(mono.H, monopole_field)
        assert err < 1e-3 and c == pytest.approx(1.0, rel=1e-3)

    def test_dipole(self, dip):
        c, err = field_error(dip.H, dipole_field)
        assert err < 2e-3 and c == pytest.approx(1.0, rel=1e-2)

    def test_dipole_error_decreases(self):
        errs = [field_error(solved("dipole", *n).H, dipole_field)[1] for n in [(32, 64), (64, 128)]]
        assert errs[1] < 0.5 * errs[0]

    def test_inner_modulus_exact(self, zpair):
        # on r = 1 the reconstruction reproduces I up to round-off
        assert np.allclose(zpair.H.modulus[0], 1.0, rtol=1e-12)

    def test_axis_component_zero(self, zpair):
        assert np.all(zpair.H.H_rho.values[:, [0, -1]] == 0.0)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(1.0, 4.0), st.floats(0.0, np.pi))
    def test_evaluator_symmetry(self, r, phi):
        H = solved("zero_pair").H
        hz1, hr1 = H.evaluator(np.array([r]), np.array([phi]))
        hz2, hr2 = H.evaluator(np.array([r]), np.array([-phi]))
        assert hz1[0] == pytest.approx(hz2[0], abs=1e-12) and hr1[0] == pytest.approx(-hr2[0], abs=1e-12)

    def test_evaluator_matches_nodes(self, dip):
        g = dip.grid
        Rm, Pm = g.mesh()
        hz, hr = dip.H.evaluator(Rm[:, 1:-1], Pm[:, 1:-1])
        assert np.allclose(hz, dip.H.H_zeta.values[:, 1:-1], atol=1e-12)
        assert np.allclose(hr, dip.H.H_rho.values[:, 1:-1], atol=1e-12)

    def test_sign_and_scale(self, dip):
        neg = -dip.H
        assert np.array_equal(neg.H_zeta.values, -dip.H.H_zeta.values)
        sc = dip.H.scaled(2.0)
        assert np.allclose(sc.modulus, 2 * dip.H.modulus)
        z, _ = sc.evaluator(np.array([2.0]), np.array([0.3]))
        assert z[0] == pytest.approx(2 * dip.H.evaluator(np.array([2.0]), np.array([0.3]))[0][0])

    def test_overflow(self):
        zd = ZeroData.bounded((), ro_hat=1)
        with pytest.raises(OverflowError):
            field_from_pq(zd, 2.0, 0.5, 2000.0, 0.0)

    def test_from_function(self):
        g = PolarGrid(3.0, 5, 9)
        H = MeridionalField.from_function(g, dipole_field)
        assert H.kind == "analytic" and H.modulus.shape == g.shape
