import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from axintensity.conjugate_pair import laplace_matrix
from axintensity.polar_grid import (PolarGrid, ScalarField, WeightSpec, assemble_cells, tent, weighted_norm)


class TestTent:
    @pytest.mark.parametrize("phi, expected", [(0.0, 0.0), (np.pi, 0.0), (np.pi / 2, np.pi / 2), (0.3, 0.3),
                                               (np.pi - 0.3, 0.3)])
    def test_values(self, phi, expected):
        assert tent(phi) == pytest.approx(expected, abs=1e-15)

    @pytest.mark.parametrize("bad", [-1e-12, np.pi + 1e-9, np.nan, np.inf])
    def test_rejects_outside(self, bad):
        with pytest.raises(ValueError):
            tent(bad)

    @given(st.floats(0, np.pi))
    def test_symmetric(self, phi):
        assert tent(phi) == pytest.approx(tent(np.pi - phi), abs=1e-15)


class TestNodes:
    def test_uniform(self):
        g = PolarGrid(4.0, 7, 9)
        assert np.allclose(g.r_nodes, np.linspace(1, 4, 7))
        assert g.phi_nodes[0] == 0.0 and g.phi_nodes[-1] == np.pi

    def test_geometric_stretch_ratio(self):
        g = PolarGrid(5.0, 9, 5, stretch=1.2)
        h = np.diff(g.r_nodes)
        assert np.allclose(h[1:] / h[:-1], 1.2)
        assert g.r_nodes[0] == 1.0 and g.r_nodes[-1] == 5.0

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_log_spacing_nests(self, k):
        small = PolarGrid(2.0**k, 8 * k + 1, 5, spacing="log")
        big = PolarGrid(2.0 ** (k + 1), 8 * (k + 1) + 1, 5, spacing="log")
        assert np.allclose(big.r_nodes[: small.nr], small.r_nodes, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("kwargs", [dict(R=1.0, nr=4, nphi=5), dict(R=2.0, nr=1, nphi=5),
                                        dict(R=2.0, nr=4, nphi=2), dict(R=2.0, nr=4, nphi=5, stretch=-1.0),
                                        dict(R=2.0, nr=4, nphi=5, spacing="cubic"),
                                        dict(R=2.0, nr=4, nphi=5, spacing="log", stretch=1.1),
                                        dict(R=2.0, nr=4, nphi=5, quad_order=0)])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            PolarGrid(**kwargs)

    def test_no_quadrature_point_on_wall(self):
        g = PolarGrid(3.0, 5, 9, quad_order=3)
        assert g.pq1.min() > 0 and g.pq1.max() < np.pi
        assert g.cell_phi.min() > 0


class TestQuadrature:
    @pytest.mark.parametrize("eta", [0.0, 1e-3, 0.5])
    def test_area(self, eta):
        g = PolarGrid(3.0, 17, 9, quad_order=3)
        R, _ = g.quad_mesh()
        exact = np.pi * (3.0 ** (2 - eta) - 1) / (2 - eta)
        assert g.integrate(np.ones_like(R), eta=eta) == pytest.approx(exact, rel=1e-6 if eta else 1e-13)

    def test_polynomial_exact(self):
        g = PolarGrid(2.0, 4, 5, quad_order=2)
        R, P = g.quad_mesh()
        # r^2 phi^3 against r dr dphi: int r^3 dr * int phi^3 dphi
        exact = (2.0**4 - 1) / 4 * np.pi**4 / 4
        assert g.integrate(R**2 * P**3) == pytest.approx(exact, rel=1e-13)

    @pytest.mark.parametrize("gamma", [0.2, 0.6])
    def test_singular_weight_converges(self, gamma):
        exact = 2 * (np.pi / 2) ** (1 - gamma) / (1 - gamma) * (9 - 1) / 2
        errs = []
        for n in (17, 65, 257):
            g = PolarGrid(3.0, 3, n)
            R, _ = g.quad_mesh()
            errs.append(abs(g.integrate(np.ones_like(R), gamma=gamma) - exact))
        assert errs[2] < errs[1] < errs[0]

    def test_bilinear_reproduction(self):
        g = PolarGrid(3.0, 6, 11, stretch=1.1)
        f = g.sample(lambda r, p: 2 + 3 * r - p + 0.5 * r * p)
        R, P = g.quad_mesh()
        assert np.allclose(f.at_quad(), 2 + 3 * R - P + 0.5 * R * P)
        gr, gp = f.gradient()
        assert np.allclose(gr, 3 + 0.5 * P)
        assert np.allclose(gp, (-1 + 0.5 * R) / R)

    def test_boundary_load_total(self):
        g = PolarGrid(3.0, 4, 33)
        load = g.boundary_load(lambda t: np.cos(t) ** 2, "outer").reshape(g.shape)
        assert load[:-1].sum() == 0.0
        assert load[-1].sum() == pytest.approx(3.0 * np.pi / 2, rel=1e-3)


class TestAssembly:
    def test_laplace_rows_sum_to_zero(self):
        g = PolarGrid(2.5, 6, 9)
        A = laplace_matrix(g)
        assert np.allclose(A @ np.ones(g.n_nodes), 0.0, atol=1e-13)
        assert abs(A - A.T).max() < 1e-14

    def test_reproducible(self):
        g = PolarGrid(2.5, 6, 9)
        rng = np.random.default_rng(3)
        local = rng.normal(size=(g.cell_conn.shape[0], 4, 4))
        A1, A2 = assemble_cells(g, local), assemble_cells(g, local)
        assert (A1 != A2).nnz == 0


class TestWeightedNorm:
    def test_constant(self):
        g = PolarGrid(2.0, 5, 9)
        f = ScalarField(g, np.full(g.shape, 2.0))
        assert weighted_norm(f, WeightSpec(p=2)) == pytest.approx(2 * np.sqrt(np.pi * 3 / 2))

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.1, 100), st.sampled_from([1.0, 2.0, 29.0]))
    def test_homogeneous(self, lam, p):
        g = PolarGrid(2.0, 5, 9)
        rng = np.random.default_rng(0)
        f = ScalarField(g, rng.normal(size=g.shape))
        w = WeightSpec(gamma=0.3, eta=1e-3, p=p)
        assert weighted_norm(ScalarField(g, lam * f.values), w) == pytest.approx(lam * weighted_norm(f, w), rel=1e-12)

    def test_large_p_no_overflow(self):
        g = PolarGrid(2.0, 5, 9)
        f = ScalarField(g, np.full(g.shape, 1e20))
        assert np.isfinite(weighted_norm(f, WeightSpec(p=29)))

    @pytest.mark.parametrize("p", [2.0, 8.0, 29.0])
    def test_bounded_by_sup(self, p):
        g = PolarGrid(2.0, 9, 17)
        f = g.sample(lambda r, ph: np.sin(ph) * r)
        R, _ = g.quad_mesh()
        mu = g.integrate(np.ones_like(R))
        sup = np.abs(f.at_quad()).max()
        assert weighted_norm(f, WeightSpec(p=p)) <= sup * mu ** (1 / p) * (1 + 1e-12)

    def test_rejects(self):
        with pytest.raises(ValueError):
            WeightSpec(p=0.5)
        with pytest.raises(ValueError):
            WeightSpec(gamma=1.0)
        g = PolarGrid(2.0, 3, 5)
        with pytest.raises(ValueError):
            weighted_norm(ScalarField(g, np.full(g.shape, np.nan)), WeightSpec())
        with pytest.raises(ValueError):
            ScalarField(g, np.zeros(4))
