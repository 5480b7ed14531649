import numpy as np
import pytest

from dualmink.errors import DegenerateStencilError
from dualmink.sphere_grid import (ScalarField, _fit_stencil_coefficients,
                                  build_grid, gradient, hessian, integrate,
                                  laplacian, symmetrize_even)

from conftest import cached_grid

E3 = np.array([0.0, 0.0, 1.0])


class TestConstruction:
    def test_s1_uniform(self):
        g = build_grid(2, 64)
        assert g.num_nodes == 64
        assert np.allclose(g.weights, 2 * np.pi / 64)
        assert abs(g.weights.sum() - 2 * np.pi) < 1e-12

    def test_s2_node_counts(self):
        # 10 * 4^level + 2 vertices
        assert build_grid(3, 0).num_nodes == 12
        assert cached_grid(3, 3).num_nodes == 642

    def test_s2_total_measure(self, s2_level3):
        assert abs(s2_level3.weights.sum() - 4 * np.pi) <= 1e-10 * 4 * np.pi
        assert np.all(s2_level3.weights > 0)

    @pytest.mark.parametrize("n,res", [(2, 64), (3, 2), (3, 3)])
    def test_unit_nodes(self, n, res):
        g = cached_grid(n, res)
        assert np.max(np.abs(np.linalg.norm(g.nodes, axis=1) - 1)) < 1e-12

    @pytest.mark.parametrize("n,res", [(2, 64), (3, 3)])
    def test_antipode_involution(self, n, res):
        g = cached_grid(n, res)
        idx = np.arange(g.num_nodes)
        assert np.all(g.antipode[g.antipode] == idx)
        assert np.all(g.antipode != idx)
        assert np.max(np.abs(g.nodes[g.antipode] + g.nodes)) < 1e-12

    def test_stencil_sizes(self, s2_level3):
        sizes = np.diff(s2_level3.stencil_ptr)
        assert sizes.min() >= 6  # enough to fit a quadratic on S^2
        g1 = cached_grid(2, 64)
        assert np.diff(g1.stencil_ptr).min() >= 3

    def test_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            build_grid(3, 9)
        with pytest.raises(ValueError, match="out of range"):
            build_grid(3, -1)
        with pytest.raises(ValueError, match="out of range"):
            build_grid(2, 8)
        with pytest.raises(ValueError, match="even"):
            build_grid(2, 33)
        with pytest.raises(ValueError):
            build_grid(4, 3)

    def test_grid_hash_is_stable(self, s2_level3):
        g2 = build_grid(3, 3)
        assert s2_level3.spec_hash() == g2.spec_hash()
        assert s2_level3.spec_hash() != cached_grid(3, 2).spec_hash()


class TestQuadrature:
    def test_constant_s2(self, s2_level3):
        one = ScalarField.constant(s2_level3, 1.0)
        assert abs(integrate(one) - 4 * np.pi) < 1e-10

    def test_constant_s1(self, s1_64):
        assert abs(integrate(ScalarField.constant(s1_64, 1.0)) - 2 * np.pi) < 1e-12

    def test_second_moment(self, s2_level4):
        # int <x,e>^2 over S^2 is (1/3)|S^2| = 4 pi / 3
        t = s2_level4.nodes @ E3
        val = integrate(ScalarField(s2_level4, t ** 2))
        assert abs(val - 4 * np.pi / 3) < 1e-6

    def test_smooth_field_refinement(self):
        # error of a generic smooth integrand decreases under refinement
        exact = None
        errs = []
        for lvl in (2, 3, 4):
            g = cached_grid(3, lvl)
            f = np.exp(g.nodes @ E3)
            # closed form: int e^t over S^2 = 2 pi (e - 1/e)
            errs.append(abs(integrate(ScalarField(g, f)) - 2 * np.pi * (np.e - 1 / np.e)))
        assert errs[2] < errs[1] < errs[0]


class TestDerivatives:
    def test_annihilate_constants(self, s2_level3):
        c = ScalarField.constant(s2_level3, 3.7)
        assert np.max(np.abs(gradient(c))) <= 1e-12
        assert np.max(np.abs(laplacian(c).values)) <= 1e-12
        assert np.max(np.abs(hessian(c))) <= 1e-12

    def test_eigenfunction_s2(self):
        # Delta <x,e> = -(n-1) <x,e> with n = 3, at second order
        errs = []
        for lvl in (3, 4):
            g = cached_grid(3, lvl)
            t = g.nodes @ E3
            lap = laplacian(ScalarField(g, t)).values
            errs.append(np.max(np.abs(lap + 2 * t)))
        order = np.log2(errs[0] / errs[1])
        assert order > 1.7

    def test_eigenfunction_s1(self, s1_64):
        t = s1_64.nodes[:, 1]
        lap = laplacian(ScalarField(s1_64, t)).values
        assert np.max(np.abs(lap + t)) < 5e-3
        g2 = cached_grid(2, 128)
        lap2 = laplacian(ScalarField(g2, g2.nodes[:, 1])).values
        assert np.max(np.abs(lap2 + g2.nodes[:, 1])) < np.max(np.abs(lap + t)) / 3

    def test_laplacian_is_trace_of_hessian(self, s2_level3, rng):
        f = ScalarField(s2_level3, rng.standard_normal(s2_level3.num_nodes))
        H = hessian(f)
        assert np.max(np.abs(laplacian(f).values - np.trace(H, axis1=1, axis2=2))) <= 1e-10

    def test_gradient_is_tangent(self, s2_level3):
        t = s2_level3.nodes @ E3
        grad = gradient(ScalarField(s2_level3, t ** 2))
        assert np.max(np.abs(np.sum(grad * s2_level3.nodes, axis=1))) < 1e-12

    def test_hessian_of_linear_restriction(self, s2_level4):
        # hess <x,e> = -<x,e> g exactly; discrete error is O(h^2)
        t = s2_level4.nodes @ E3
        H = hessian(ScalarField(s2_level4, t))
        target = -t[:, None, None] * np.eye(2)[None]
        assert np.max(np.abs(H - target)) < 5e-3

    def test_degenerate_stencil_reported(self):
        # collinear 2-D stencil cannot support a quadratic in both directions
        xi = np.array([[0.0, 0.0], [0.1, 0.0], [0.2, 0.0], [-0.1, 0.0],
                       [-0.2, 0.0], [0.3, 0.0], [-0.3, 0.0], [0.05, 0.0],
                       [0.15, 0.0], [0.25, 0.0], [-0.05, 0.0], [-0.15, 0.0]])
        ptr = np.array([0, xi.shape[0]], dtype=np.int64)
        with pytest.raises(DegenerateStencilError, match="node 0"):
            _fit_stencil_coefficients(xi, ptr, dim=2, degree=3)


class TestSymmetrize:
    def test_even_fixed_point(self, s2_level3):
        t = s2_level3.nodes @ E3
        f = ScalarField(s2_level3, t ** 2)
        assert np.array_equal(symmetrize_even(f).values, f.values)

    def test_odd_annihilated(self, s2_level3):
        t = s2_level3.nodes @ E3
        f = ScalarField(s2_level3, t)
        assert np.max(np.abs(symmetrize_even(f).values)) == 0.0

    def test_affine(self, s2_level3):
        t = s2_level3.nodes @ E3
        f = ScalarField(s2_level3, 1.0 + t)
        assert np.max(np.abs(symmetrize_even(f).values - 1.0)) == 0.0

    def test_idempotent(self, s2_level3, rng):
        f = ScalarField(s2_level3, rng.standard_normal(s2_level3.num_nodes))
        once = symmetrize_even(f)
        twice = symmetrize_even(once)
        assert np.array_equal(once.values, twice.values)

    def test_commutes_with_integrate(self, s2_level3, rng):
        # weights are antipodally even, so projection preserves the integral
        f = ScalarField(s2_level3, rng.standard_normal(s2_level3.num_nodes))
        assert abs(integrate(symmetrize_even(f)) - integrate(f)) < 1e-12


class TestScalarField:
    def test_validation(self, s2_level3):
        with pytest.raises(ValueError, match="nodes"):
            ScalarField(s2_level3, np.ones(7))
        bad = np.ones(s2_level3.num_nodes)
        bad[0] = np.nan
        with pytest.raises(ValueError, match="finite"):
            ScalarField(s2_level3, bad)

    def test_arithmetic(self, s2_level3):
        f = ScalarField.constant(s2_level3, 2.0)
        assert np.all((f + 1.0).values == 3.0)
        assert np.all((0.5 * f).values == 1.0)
        assert np.all((f + f).values == 4.0)
