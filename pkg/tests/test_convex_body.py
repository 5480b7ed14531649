import numpy as np
import pytest

from dualmink.convex_body import (SupportFn, dual_integral_identity, embed,
                                  export_obj, geometric_identity_report,
                                  radial_from_support, support_from_radial)
from dualmink.equation import ProblemParams
from dualmink.sphere_grid import ScalarField

from conftest import cached_grid

E3 = np.array([0.0, 0.0, 1.0])


def translated_ball(grid, a=0.3):
    """Support function of the unit ball centered at a*e3."""
    return SupportFn.from_values(grid, 1.0 + a * (grid.nodes @ E3))


class TestSupportFn:
    def test_positivity_required(self, s2_level3):
        vals = np.ones(s2_level3.num_nodes)
        vals[5] = -0.1
        with pytest.raises(ValueError, match="positive"):
            SupportFn.from_values(s2_level3, vals)

    def test_unit_ball_curvature(self, s2_level3):
        h = SupportFn.constant(s2_level3, 1.0)
        assert np.max(np.abs(h.det_b - 1.0)) < 1e-12
        assert np.max(np.abs(h.min_eig_b - 1.0)) < 1e-12
        assert h.is_convex()

    def test_translated_ball_b_is_identity(self, s2_level4):
        # hess<x,e> + <x,e> I cancels: b = I for any translate of the unit ball
        h = translated_ball(s2_level4)
        assert np.max(np.abs(h.b_pack - np.array([1.0, 0.0, 1.0]))) < 1e-3
        assert h.is_convex(tol_psd=1e-3)

    def test_trace_b_matches_H(self, s2_level3):
        h = translated_ball(s2_level3)
        t = s2_level3.nodes @ E3
        # H = (n-1) h + Delta h = 2(1 + 0.3 t) - 2*0.3 t = 2
        assert np.max(np.abs(h.trace_b - 2.0)) < 5e-3


class TestEmbed:
    def test_unit_sphere(self, s2_level3):
        h = SupportFn.constant(s2_level3, 1.0)
        assert np.max(np.abs(embed(h) - s2_level3.nodes)) < 1e-12

    def test_translated_ball(self, s2_level4):
        h = translated_ball(s2_level4)
        X = embed(h)
        assert np.max(np.abs(X - (s2_level4.nodes + 0.3 * E3))) < 1e-4

    def test_norm_identity(self, s2_level3, rng):
        # |X|^2 = |grad h|^2 + h^2 is algebraic: holds for any field
        vals = 1.0 + 0.1 * rng.standard_normal(s2_level3.num_nodes)
        h = SupportFn.from_values(s2_level3, vals)
        X = embed(h)
        assert np.max(np.abs(np.sum(X ** 2, axis=1) - (h.grad_sq + h.values ** 2))) < 1e-12

    def test_constant_norm(self, s1_64):
        h = SupportFn.constant(s1_64, 2.5)
        assert np.max(np.abs(np.linalg.norm(embed(h), axis=1) - 2.5)) < 1e-12


class TestRadial:
    def test_unit_ball(self, s2_level3):
        h = SupportFn.constant(s2_level3, 1.0)
        u = np.array([0.6, 0.0, 0.8])
        assert abs(radial_from_support(h, u) - 1.0) < 1e-10

    def test_translated_ball_axis(self, s2_level4):
        h = translated_ball(s2_level4)
        assert abs(radial_from_support(h, E3) - 1.3) < 1e-9

    def test_translated_ball_orthogonal(self, s2_level4):
        # |rho u - 0.3 e| = 1 with u _|_ e: rho = sqrt(1 - 0.09)
        h = translated_ball(s2_level4)
        u = np.array([1.0, 0.0, 0.0])
        assert abs(radial_from_support(h, u) - np.sqrt(0.91)) < 1e-5

    def test_matches_pushforward_identity(self, s2_level4):
        h = translated_ball(s2_level4)
        X = embed(h)
        dirs = X / np.linalg.norm(X, axis=1, keepdims=True)
        rho = radial_from_support(h, dirs)
        assert np.max(np.abs(rho - h.rho)) < 2e-4

    def test_roundtrip_support_radial(self, s2_level4):
        h = translated_ball(s2_level4)
        rho = radial_from_support(h, s2_level4.nodes)
        rho_field = ScalarField(s2_level4, rho)
        back = support_from_radial(rho_field, s2_level4.nodes)
        assert np.max(np.abs(back - h.values)) < 2e-3

    def test_radial_constant_body(self, s1_64):
        h = SupportFn.constant(s1_64, 2.0)
        assert abs(radial_from_support(h, np.array([0.0, 1.0])) - 2.0) < 1e-10


class TestGeometryReport:
    def test_unit_ball(self, s2_level3):
        rep = geometric_identity_report(SupportFn.constant(s2_level3, 1.0))
        assert abs(rep.max_h - 1.0) < 1e-12
        assert rep.max_gap < 1e-9
        assert rep.grad_bound_ok
        assert rep.even_cone_ok

    def test_translated_ball(self, s2_level4):
        rep = geometric_identity_report(translated_ball(s2_level4),
                                        check_even_cone=False)
        assert abs(rep.max_h - 1.3) < 1e-9   # the pole is a node
        assert abs(rep.max_rho - 1.3) < 1e-6
        assert rep.grad_bound_ok
        assert rep.even_cone_ok is None

    def test_even_cone_for_even_body(self, s2_level4):
        t = s2_level4.nodes @ E3
        h = SupportFn.from_values(s2_level4, 1.0 + 0.2 * t ** 2)
        rep = geometric_identity_report(h)
        assert rep.even_cone_ok
        assert rep.even_cone_margin >= -1e-6


class TestDualIntegral:
    def test_unit_ball(self, s2_level3):
        h = SupportFn.constant(s2_level3, 1.0)
        f = ScalarField.constant(s2_level3, 1.0)
        rep = dual_integral_identity(h, f, ProblemParams(3, 2.0, 1.0))
        assert abs(rep.lhs - 4 * np.pi) < 1e-9
        assert abs(rep.rhs - 4 * np.pi) < 1e-9
        assert rep.rel_gap < 1e-12

    def test_constant_solution(self, s2_level3):
        # f = 4, p = 2, q = 1: h = 0.25; lhs = 4pi*4/16 = pi, rhs = 4pi/4 = pi
        h = SupportFn.constant(s2_level3, 0.25)
        f = ScalarField.constant(s2_level3, 4.0)
        rep = dual_integral_identity(h, f, ProblemParams(3, 2.0, 1.0))
        assert abs(rep.lhs - np.pi) < 1e-10
        assert abs(rep.rhs - np.pi) < 1e-10
        assert rep.rel_gap < 1e-12


class TestObjExport:
    def test_roundtrip(self, s2_level3, tmp_path):
        h = translated_ball(s2_level3)
        path = tmp_path / "body.obj"
        export_obj(h, path)
        lines = path.read_text().splitlines()
        verts = [ln for ln in lines if ln.startswith("v ")]
        faces = [ln for ln in lines if ln.startswith("f ")]
        assert len(verts) == s2_level3.num_nodes
        assert len(faces) == s2_level3.faces.shape[0]
        first = np.array([float(x) for x in verts[0].split()[1:]])
        assert np.allclose(first, embed(h)[0], atol=1e-8)
        idx = np.array([int(x) for x in faces[0].split()[1:]])
        assert idx.min() >= 1  # OBJ is 1-based

    def test_s1_rejected(self, s1_64, tmp_path):
        h = SupportFn.constant(s1_64, 1.0)
        with pytest.raises(ValueError, match="S\\^2"):
            export_obj(h, tmp_path / "x.obj")
