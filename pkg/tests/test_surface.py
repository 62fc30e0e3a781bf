import warnings

import numpy as np
import pytest

from conftest import random_curve
from devstrip import fixtures
from devstrip.exceptions import DegenerateGeometryError, DomainError
from devstrip.mapping import MappingFunction, init_identity
from devstrip.splines import BSplineCurve, KnotVector
from devstrip.surface import RuledStrip

T1000 = np.linspace(0.0, 1.0, 1000)


def squared_mapping(n=12):
    kv = KnotVector.uniform(2, n)
    U = kv.knots
    return MappingFunction.from_betas(kv, U[1:-2] * U[2:-1])


@pytest.fixture
def cyl_strip():
    c1, c2 = fixtures.cylinder_pair()
    return RuledStrip(c1, c2, squared_mapping())


@pytest.fixture
def random_strip(rng):
    eps = rng.uniform(0.2, 1.0, 8)
    return RuledStrip(random_curve(rng), random_curve(rng),
                      MappingFunction(KnotVector.uniform(3, 8), eps / np.linalg.norm(eps)))


class TestEval:
    def test_boundaries_are_exact(self, random_strip):
        S = random_strip
        np.testing.assert_array_equal(S.eval(0.0, T1000), S.c1(T1000))
        np.testing.assert_array_equal(S.eval(1.0, T1000), S.c2(S.sigma(T1000)))

    def test_midpoint(self, random_strip):
        S = random_strip
        np.testing.assert_allclose(S.eval(0.5, T1000),
                                   0.5 * (S.c1(T1000) + S.c2(S.sigma(T1000))), atol=1e-15)

    def test_cylinder_membership(self, cyl_strip):
        s, t = np.meshgrid(np.linspace(0, 1, 21), np.linspace(0, 1, 51))
        P = cyl_strip.eval(s, t)
        assert np.max(np.abs(P[..., 1] - P[..., 0] ** 2)) <= 1e-10

    def test_broadcast_shape(self, random_strip):
        assert random_strip.eval(np.linspace(0, 1, 3)[:, None], T1000[None, :]).shape == (3, 1000, 3)

    def test_domain(self, random_strip):
        with pytest.raises(DomainError):
            random_strip.eval(1.5, 0.2)
        with pytest.raises(DomainError):
            random_strip.eval(0.5, -0.2)

    def test_ruling_direction_independent_of_s(self, random_strip):
        a, _ = random_strip.tangents(0.0, T1000)
        b, _ = random_strip.tangents(0.8, T1000)
        np.testing.assert_array_equal(a, b)


class TestNormal:
    def test_planar(self, rng):
        c1, c2 = random_curve(rng), random_curve(rng)
        flat = [BSplineCurve(c.knots, c.control_points * [1, 1, 0]) for c in (c1, c2)]
        strip = RuledStrip(*flat, init_identity())
        n = strip.normal(np.linspace(0.05, 0.95, 7)[:, None], np.linspace(0.05, 0.95, 9)[None, :])
        np.testing.assert_allclose(np.abs(n[..., 2]), 1.0, atol=1e-12)

    def test_developable_ruling_has_constant_normal(self, cyl_strip):
        t = T1000[1:]
        n0 = cyl_strip.normal(0.0, t)
        n1 = cyl_strip.normal(1.0, t)
        np.testing.assert_allclose(np.einsum("ij,ij->i", n0, n1), 1.0, atol=1e-9)

    def test_orthogonal_to_finite_difference_tangents(self, random_strip):
        S = random_strip
        h = 1e-6
        for s, t in [(0.2, 0.3), (0.7, 0.55), (0.5, 0.9)]:
            n = S.normal(s, t)
            Ss = (S.eval(s + h, t) - S.eval(s - h, t)) / (2 * h)
            St = (S.eval(s, t + h) - S.eval(s, t - h)) / (2 * h)
            assert abs(n @ Ss) <= 1e-8 * np.linalg.norm(Ss)
            assert abs(n @ St) <= 1e-8 * np.linalg.norm(St)
            assert np.linalg.norm(n) == pytest.approx(1.0, abs=1e-14)

    def test_exact_orthogonality(self, random_strip):
        n = random_strip.normal(0.3, T1000)
        Ss, St = random_strip.tangents(0.3, T1000)
        assert np.max(np.abs(np.einsum("ij,ij->i", n, Ss))) <= 1e-10
        assert np.max(np.abs(np.einsum("ij,ij->i", n, St))) <= 1e-10

    def test_degenerate(self, cyl_strip):
        # C1'(0) = 0 and the ruling at t = 0 meets C2 where sigma'(0) = 0
        with pytest.raises(DegenerateGeometryError):
            cyl_strip.normal(0.0, 0.0)


class TestTessellate:
    def test_corners(self, random_strip):
        S = random_strip
        mesh = S.tessellate(2, 2)
        want = [S.eval(0, 0), S.eval(0, 1), S.eval(1, 0), S.eval(1, 1)]
        np.testing.assert_array_equal(mesh.vertices, want)
        assert mesh.quads.tolist() == [[0, 2, 3, 1]]

    def test_counts_and_vertices(self, random_strip):
        mesh = random_strip.tessellate(5, 17)
        assert mesh.vertices.shape == (85, 3)
        assert mesh.quads.shape == (64, 4)
        i, j = 3, 11
        np.testing.assert_array_equal(mesh.vertices[i * 17 + j],
                                      random_strip.eval(i / 4, j / 16))
        assert mesh.warp.shape == (85,)

    def test_too_small(self, random_strip):
        with pytest.raises(DomainError):
            random_strip.tessellate(1, 5)


class TestTrim:
    def test_full_interval_is_identity(self, random_strip):
        assert random_strip.trim_to_original(0.0, 1.0) is random_strip

    def test_cylinder_stays_developable(self, cyl_strip):
        sub = cyl_strip.trim_to_original(0.25, 0.75)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            assert sub.warp_profile(200).beta_max <= 1e-6
        assert np.all(np.diff(sub.sigma.betas) >= 0)

    def test_boundaries_follow_original(self, random_strip):
        S = random_strip
        lo, hi = 0.2, 0.65
        sub = S.trim_to_original(lo, hi)
        u = np.linspace(0, 1, 101)
        np.testing.assert_allclose(sub.eval(0.0, u), S.eval(0.0, lo + u * (hi - lo)), atol=1e-12)
        np.testing.assert_allclose(sub.eval(1.0, u), S.eval(1.0, lo + u * (hi - lo)), atol=1e-12)
        np.testing.assert_allclose(sub.eval(0.4, u), S.eval(0.4, lo + u * (hi - lo)), atol=1e-12)

    @pytest.mark.parametrize("lo, hi", [(0.5, 0.5), (0.7, 0.2), (-0.1, 0.5)])
    def test_invalid(self, random_strip, lo, hi):
        with pytest.raises(DomainError):
            random_strip.trim_to_original(lo, hi)


def test_no_parameter_crossings(random_strip):
    t = np.sort(np.random.default_rng(3).uniform(0, 1, 5000))
    assert np.all(np.diff(random_strip.sigma(t)) >= 0)
