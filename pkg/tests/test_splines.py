import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import BSpline

from conftest import cox_de_boor, random_curve
from devstrip.exceptions import DomainError, KnotMultiplicityError
from devstrip.fixtures import FIG5_CURVE_KNOTS, FIG5_MAP_KNOTS, fig5_setup
from devstrip.splines import (BezierSegment, BSplineCurve, KnotVector, basis_functions,
                              basis_matrix, bernstein_to_power, bernstein_to_power_matrix,
                              compose_polynomials, elevate_degree, eval_curve,
                              eval_derivatives, extract_bezier_segments, find_span,
                              insert_knot, polyval, power_to_bernstein,
                              power_to_bernstein_matrix, refine)

T1000 = np.linspace(0.0, 1.0, 1000)
FIG5_KV = KnotVector(3, FIG5_CURVE_KNOTS)


def scipy_eval(c, t):
    return BSpline(c.knots.knots, c.control_points, c.degree)(t)


class TestKnotVector:
    def test_rejects_unclamped(self):
        with pytest.raises(DomainError):
            KnotVector(2, [0, 0, 0.5, 1, 1, 1])

    def test_rejects_decreasing(self):
        with pytest.raises(DomainError):
            KnotVector(1, [0, 0, 0.6, 0.4, 1, 1])

    def test_rejects_interior_overflow(self):
        with pytest.raises(KnotMultiplicityError):
            KnotVector(2, [0, 0, 0, 0.5, 0.5, 0.5, 1, 1, 1])

    def test_uniform_and_greville(self):
        kv = KnotVector.uniform(2, 5)
        assert kv.knots.tolist() == [0, 0, 0, 1 / 3, 2 / 3, 1, 1, 1]
        np.testing.assert_allclose(kv.greville(), [0, 1 / 6, 0.5, 5 / 6, 1])


class TestFindSpan:
    def test_fig5_quarter(self):
        assert find_span(FIG5_KV, 0.25) == 3

    def test_zero_is_first_nondegenerate_span(self):
        s = find_span(FIG5_KV, 0.0)
        assert s == 3 and FIG5_KV.knots[s] < FIG5_KV.knots[s + 1]

    def test_half_against_linear_scan(self):
        U = FIG5_KV.knots
        scan = max(i for i in range(U.size - 1) if U[i] <= 0.5 < U[i + 1])
        assert find_span(FIG5_KV, 0.5) == scan == 4

    def test_one_maps_to_last_span(self):
        s = find_span(FIG5_KV, 1.0)
        assert s == 4 and FIG5_KV.knots[s] < FIG5_KV.knots[s + 1] == 1.0

    @pytest.mark.parametrize("t", [-0.1, 1.1, float("nan")])
    def test_domain(self, t):
        with pytest.raises(DomainError):
            find_span(FIG5_KV, t)


class TestBasis:
    def test_linear_hat(self):
        kv = KnotVector(1, [0, 0, 0.5, 1, 1])
        np.testing.assert_allclose(basis_functions(kv, 0.25), [0.5, 0.5], atol=1e-15)

    def test_quadratic_against_cox_de_boor(self):
        kv = KnotVector.uniform(2, 7)
        span = find_span(kv, 0.3)
        want = [cox_de_boor(kv.knots, i, 2, 0.3) for i in range(span - 2, span + 1)]
        np.testing.assert_allclose(basis_functions(kv, 0.3, span), want, atol=1e-12)

    def test_full_matrix_against_cox_de_boor(self, rng):
        kv = random_curve(rng, 3, 9).knots
        t = np.r_[rng.uniform(0, 1, 40), 0.0, 1.0]
        B = basis_matrix(kv, t)[0]
        want = np.array([[cox_de_boor(kv.knots, i, 3, x) for i in range(kv.n_basis)]
                         for x in t])
        np.testing.assert_allclose(B, want, atol=1e-12)

    def test_partition_of_unity(self, rng):
        for degree in (1, 2, 3, 5):
            kv = random_curve(rng, degree, degree + 6).knots
            B = basis_matrix(kv, rng.uniform(0, 1, 1000))[0]
            assert np.all(B >= 0)
            np.testing.assert_allclose(B.sum(axis=1), 1.0, atol=1e-12)

    def test_derivative_matrix_against_scipy(self, rng):
        kv = random_curve(rng, 3, 10).knots
        t = rng.uniform(0, 1, 30)
        D = basis_matrix(kv, t, nder=2)
        for i in range(kv.n_basis):
            e = np.eye(kv.n_basis)[i]
            spl = BSpline(kv.knots, e, 3)
            np.testing.assert_allclose(D[1, :, i], spl.derivative(1)(t), atol=1e-9)
            np.testing.assert_allclose(D[2, :, i], spl.derivative(2)(t), atol=1e-7)


class TestEvaluation:
    def test_endpoints_interpolate(self, rng):
        c = random_curve(rng)
        np.testing.assert_array_equal(eval_curve(c, 0.0), c.control_points[0])
        np.testing.assert_allclose(eval_curve(c, 1.0), c.control_points[-1], atol=1e-15)

    def test_matches_scipy(self, rng):
        c = random_curve(rng, 3, 12)
        np.testing.assert_allclose(c(T1000), scipy_eval(c, T1000), atol=1e-13)

    def test_straight_line_derivative_is_chord(self):
        A, B = np.array([0.1, 0.2, 0.3]), np.array([0.9, 0.4, 0.0])
        kv = KnotVector.uniform(3, 6)
        c = BSplineCurve(kv, np.outer(kv.greville(), B - A) + A)
        d = eval_derivatives(c, np.linspace(0, 1, 11), 2)
        np.testing.assert_allclose(d[1], np.tile(B - A, (11, 1)), atol=1e-12)
        np.testing.assert_allclose(d[2], 0.0, atol=1e-10)

    def test_derivative_finite_difference(self, rng):
        c = random_curve(rng)
        h = 1e-6
        fd = (c(0.37 + h) - c(0.37 - h)) / (2 * h)
        d = c.derivatives(0.37, 1)[1]
        assert np.linalg.norm(fd - d) <= 1e-5 * np.linalg.norm(d)

    def test_order_zero_and_beyond_degree(self, rng):
        c = random_curve(rng, 2, 6)
        d = c.derivatives(T1000, 4)
        np.testing.assert_array_equal(d[0], c(T1000))
        np.testing.assert_array_equal(d[3:], 0.0)

    def test_domain(self, rng):
        with pytest.raises(DomainError):
            random_curve(rng)(1.5)

    def test_control_point_count_checked(self):
        with pytest.raises(DomainError):
            BSplineCurve(FIG5_KV, np.zeros((4, 3)))


class TestInsertion:
    def test_fig5_insert_half(self):
        c1, _, _ = fig5_setup()
        r = insert_knot(c1, 0.5)
        assert r.knots.n_basis == 6
        np.testing.assert_allclose(r(T1000), c1(T1000), atol=1e-12)

    def test_full_multiplicity_rejected(self):
        c1, _, _ = fig5_setup()
        full = insert_knot(c1, 0.5, 2)
        with pytest.raises(KnotMultiplicityError):
            insert_knot(full, 0.5)

    def test_random_insertions_preserve_trace(self, rng):
        c = random_curve(rng, 3, 9)
        r = c
        for u in rng.uniform(0, 1, 15):
            r = insert_knot(r, u)
        np.testing.assert_allclose(r(T1000), c(T1000), atol=1e-12)

    def test_refine_skips_existing(self):
        c1, _, _ = fig5_setup()
        r = refine(c1, [0.5, 0.25, 0.5 + 1e-12])
        assert r.knots.interior().tolist() == [0.25, 0.5]
        assert r.knots.multiplicity(0.5) == 1


class TestElevation:
    def test_linear_midpoint(self):
        A, B = [0.0, 1.0, 2.0], [4.0, 3.0, 2.0]
        c = BSplineCurve(KnotVector.bezier(1), [A, B])
        e = elevate_degree(c, 2)
        np.testing.assert_allclose(e.control_points, [A, [2.0, 2.0, 2.0], B])

    def test_fig5_to_six(self):
        c1, _, _ = fig5_setup()
        e = elevate_degree(c1, 6)
        assert e.degree == 6
        np.testing.assert_allclose(e(T1000), c1(T1000), atol=1e-12)
        # continuity at the interior knot is kept: multiplicity grows by 3
        assert e.knots.multiplicity(0.5) == 4

    def test_same_degree_is_identity(self, rng):
        c = random_curve(rng)
        assert elevate_degree(c, 3) is c

    def test_lower_degree_rejected(self, rng):
        with pytest.raises(DomainError):
            elevate_degree(random_curve(rng), 2)

    def test_random_curves(self, rng):
        for p, t in ((1, 3), (2, 2), (3, 1), (4, 3)):
            c = random_curve(rng, p, p + 5)
            e = elevate_degree(c, p + t)
            assert np.max(np.abs(e(T1000) - c(T1000))) <= 1e-10


class TestBezierExtraction:
    def test_fig5_two_segments(self):
        c1, _, _ = fig5_setup()
        segs = extract_bezier_segments(c1)
        assert [s.source_interval for s in segs] == [(0.0, 0.5), (0.5, 1.0)]
        u = np.linspace(0, 1, 100)
        for s in segs:
            a, b = s.source_interval
            np.testing.assert_allclose(s(u), c1(a + u * (b - a)), atol=1e-12)
        np.testing.assert_array_equal(segs[0].control_points[-1], segs[1].control_points[0])

    def test_single_span_unchanged(self, rng):
        c = BSplineCurve(KnotVector.bezier(4), rng.uniform(0, 1, (5, 3)))
        (seg,) = extract_bezier_segments(c)
        np.testing.assert_array_equal(seg.control_points, c.control_points)

    def test_fig5_refined_mapping_has_nine_pieces(self):
        c1, c2, sigma = fig5_setup()
        assert len(extract_bezier_segments(sigma.to_scalar_spline())) == len(set(FIG5_MAP_KNOTS)) - 1
        # refinement adds the preimage of the curves' knot 0.5 (0.5 itself is already there)
        v = sigma.inverse(0.5)
        refined = sigma.to_scalar_spline().refine([v, 0.5])
        assert len(extract_bezier_segments(refined)) == 9

    def test_split_and_restrict(self, rng):
        seg = BezierSegment(rng.uniform(0, 1, (4, 3)), (0.2, 0.6))
        left, right = seg.split(0.3)
        u = np.linspace(0, 1, 50)
        np.testing.assert_allclose(left(u), seg(0.3 * u), atol=1e-14)
        np.testing.assert_allclose(right(u), seg(0.3 + 0.7 * u), atol=1e-14)
        r = seg.restrict(-0.5, 1.5)
        np.testing.assert_allclose(r(u), seg(-0.5 + 2.0 * u), atol=1e-12)
        assert r.source_interval == pytest.approx((0.0, 0.8))


class TestBasisConversion:
    def test_constant(self):
        np.testing.assert_allclose(power_to_bernstein([1.0], 5), np.ones(6))

    def test_t_at_degree_two(self):
        np.testing.assert_allclose(power_to_bernstein([0.0, 1.0], 2), [0.0, 0.5, 1.0])

    def test_random_degree_six(self, rng):
        p = rng.normal(size=(7, 3))
        b = power_to_bernstein(p, 6)
        u = np.linspace(0, 1, 50)
        seg = BezierSegment(b)
        np.testing.assert_allclose(seg(u), polyval(p, u), rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(bernstein_to_power(b), p, rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("D", [1, 3, 6, 10, 15])
    def test_matrices_are_inverse(self, D):
        M = bernstein_to_power_matrix(D) @ power_to_bernstein_matrix(D)
        np.testing.assert_allclose(M, np.eye(D + 1), atol=1e-10)

    def test_degree_overflow(self):
        with pytest.raises(DomainError):
            power_to_bernstein([0, 0, 0, 1.0], 2)

    def test_padding_zeros_allowed(self):
        np.testing.assert_allclose(power_to_bernstein([0, 1.0, 0, 0], 1), [0, 1])


class TestComposition:
    def test_identity_outer(self, rng):
        inner = rng.normal(size=4)
        np.testing.assert_allclose(compose_polynomials([0.0, 1.0], inner), inner, atol=1e-15)

    def test_square_of_square(self):
        np.testing.assert_allclose(compose_polynomials([0, 0, 1.0], [0, 0, 1.0]),
                                   [0, 0, 0, 0, 1.0], atol=1e-15)

    def test_cubic_of_quadratic_nested(self, rng):
        outer = rng.normal(size=(4, 3))
        inner = rng.normal(size=3)
        comp = compose_polynomials(outer, inner)
        assert comp.shape == (7, 3)
        u = np.linspace(0, 1, 100)
        nested = polyval(outer, polyval(inner, u))
        np.testing.assert_allclose(polyval(comp, u), nested, rtol=1e-9, atol=1e-12)

    def test_degree_bound(self):
        with pytest.raises(DomainError):
            compose_polynomials(np.ones(5), np.ones(5))


@st.composite
def curves(draw):
    degree = draw(st.integers(1, 4))
    n_int = draw(st.integers(0, 5))
    interior = sorted(draw(st.lists(st.floats(0.02, 0.98), min_size=n_int, max_size=n_int)))
    # keep multiplicities legal
    kept = [u for u in interior if interior.count(u) <= degree]
    n = len(kept) + degree + 1
    pts = draw(st.lists(st.tuples(*[st.floats(0, 1)] * 3), min_size=n, max_size=n))
    knots = [0.0] * (degree + 1) + kept + [1.0] * (degree + 1)
    return BSplineCurve(KnotVector(degree, knots), np.array(pts))


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(curves(), st.floats(0.01, 0.99), st.integers(1, 2))
    def test_insertion_preserves_trace(self, c, u, times):
        if c.knots.multiplicity(u) + times > c.degree:
            return
        r = insert_knot(c, u, times)
        assert np.max(np.abs(r(T1000) - c(T1000))) <= 1e-10

    @settings(max_examples=60, deadline=None)
    @given(curves(), st.integers(0, 3))
    def test_elevation_preserves_trace(self, c, extra):
        e = elevate_degree(c, c.degree + extra)
        assert np.max(np.abs(e(T1000) - c(T1000))) <= 1e-10

    @settings(max_examples=60, deadline=None)
    @given(curves())
    def test_extraction_reassembles(self, c):
        u = np.linspace(0, 1, 100)
        segs = extract_bezier_segments(c)
        for a, b in zip(segs, segs[1:]):
            np.testing.assert_array_equal(a.control_points[-1], b.control_points[0])
        for s in segs:
            lo, hi = s.source_interval
            assert np.max(np.abs(s(u) - c(lo + u * (hi - lo)))) <= 1e-10

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 12), st.data())
    def test_power_bernstein_round_trip(self, D, data):
        coeffs = np.array(data.draw(st.lists(st.floats(-1, 1), min_size=D + 1, max_size=D + 1)))
        back = bernstein_to_power(power_to_bernstein(coeffs, D))
        assert np.max(np.abs(back - coeffs)) <= 1e-10

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-1, 1), min_size=1, max_size=4),
           st.lists(st.floats(-1, 1), min_size=1, max_size=4))
    def test_composition_matches_nested(self, outer, inner):
        comp = compose_polynomials(outer, inner)
        u = np.linspace(0, 1, 100)
        nested = polyval(np.array(outer), polyval(np.array(inner), u))
        assert np.max(np.abs(polyval(comp, u) - nested)) <= 1e-9 * max(1.0, np.max(np.abs(nested)))

    @settings(max_examples=40, deadline=None)
    @given(curves())
    def test_partition_of_unity(self, c):
        t = np.random.default_rng(0).uniform(0, 1, 1000)
        B = basis_matrix(c.knots, t)[0]
        assert np.max(np.abs(B.sum(axis=1) - 1.0)) <= 1e-12
