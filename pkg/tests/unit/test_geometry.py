"""
Unit tests for core/geometry.py
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.errors import GeometryError, UsageError
from core.geometry import (
    Disk,
    Line,
    Polygon,
    Segment,
    cost_index,
    cost_intensity_density,
    hitting_measure,
    measure_lines_meeting_two_disks,
    measure_lines_meeting_two_segments,
    normal_form,
    perimeter,
    projection,
    random_convex_polygon,
    segments_intersect,
    uniform_lines,
)

angles = st.floats(min_value=-20.0, max_value=20.0, allow_nan=False)
offsets = st.floats(min_value=-100.0, max_value=100.0, allow_nan=False)


# ---------------------------------------------------------------------------
# Lines
# ---------------------------------------------------------------------------

class TestNormalForm:
    def test_canonical_pair_unchanged(self):
        assert normal_form(0.5, 2.0) == (0.5, 2.0)

    def test_half_turn_flips_offset(self):
        phi, r = normal_form(math.pi + 0.5, 2.0)
        assert phi == pytest.approx(0.5)
        assert r == -2.0

    def test_negative_angle(self):
        phi, r = normal_form(-0.5, 1.0)
        assert phi == pytest.approx(math.pi - 0.5)
        assert r == -1.0

    def test_angle_near_pi_identified_with_zero(self):
        phi, r = normal_form(math.pi - 1e-14, 3.0)
        assert phi == 0.0
        assert r == -3.0

    def test_non_finite_rejected(self):
        with pytest.raises(GeometryError):
            normal_form(math.nan, 0.0)
        with pytest.raises(GeometryError):
            normal_form(0.0, math.inf)

    @given(angles, offsets)
    @settings(max_examples=200)
    def test_same_line_after_reduction(self, phi, r):
        line = Line.normal_form(phi, r)
        assert 0.0 <= line.phi < math.pi
        foot = (r * math.cos(phi), r * math.sin(phi))
        assert line.distance(foot) == pytest.approx(0.0, abs=1e-9 * max(1.0, abs(r)))


class TestLine:
    def test_phi_out_of_range_rejected(self):
        with pytest.raises(GeometryError):
            Line(math.pi, 0.0)

    def test_from_points_horizontal(self):
        line = Line.from_points((0.0, 0.0), (1.0, 0.0))
        assert line.phi == pytest.approx(math.pi / 2)
        assert line.r == pytest.approx(0.0)

    def test_from_points_passes_through_both(self):
        a, b = (0.3, -1.2), (2.5, 0.7)
        line = Line.from_points(a, b)
        assert line.distance(a) == pytest.approx(0.0, abs=1e-12)
        assert line.distance(b) == pytest.approx(0.0, abs=1e-12)

    def test_from_equal_points_rejected(self):
        with pytest.raises(GeometryError):
            Line.from_points((1.0, 1.0), (1.0, 1.0))

    def test_direction_orthogonal_to_normal(self):
        line = Line(0.7, 0.2)
        assert float(line.direction @ line.normal) == pytest.approx(0.0, abs=1e-15)

    def test_point_at_and_param_inverse(self):
        line = Line(1.1, -0.4)
        p = line.point_at(0.75)
        assert line.param(p) == pytest.approx(0.75)
        assert line.distance(p) == pytest.approx(0.0, abs=1e-15)

    def test_foot_is_perpendicular(self):
        line = Line(0.0, 1.0)     # x = 1
        foot = line.foot((3.0, 2.0))
        np.testing.assert_allclose(foot, [1.0, 2.0])

    def test_chord_of_unit_disk(self):
        lo, hi = Line(0.0, 0.6).chord((0.0, 0.0), 1.0)
        assert (lo, hi) == pytest.approx((-0.8, 0.8))

    def test_chord_missing_disk(self):
        assert Line(0.0, 1.5).chord((0.0, 0.0), 1.0) is None

    def test_intersect(self):
        p = Line(0.0, 1.0).intersect(Line(math.pi / 2, 2.0))
        np.testing.assert_allclose(p, [1.0, 2.0], atol=1e-15)

    def test_parallel_lines_do_not_intersect(self):
        assert Line(0.3, 0.0).intersect(Line(0.3, 1.0)) is None

    @given(angles, st.floats(-0.99, 0.99), st.floats(0.1, 10.0))
    def test_chord_ends_on_circle(self, phi, frac, radius):
        line = Line.normal_form(phi, frac * radius)
        lo, hi = line.chord((0.0, 0.0), radius)
        for t in (lo, hi):
            assert float(np.hypot(*line.point_at(t))) == pytest.approx(radius, rel=1e-9)


class TestUniformLines:
    def test_every_line_hits_disk(self):
        rng = np.random.default_rng(3)
        phi, r = uniform_lines(rng, 500, (2.0, -1.0), 0.5)
        dist = np.abs(2.0 * np.cos(phi) - 1.0 * np.sin(phi) - r)
        assert np.all(dist <= 0.5)
        assert np.all((phi >= 0) & (phi < math.pi))


# ---------------------------------------------------------------------------
# Bodies and hitting measures
# ---------------------------------------------------------------------------

class TestBodies:
    def test_disk_radius_must_be_positive(self):
        with pytest.raises(GeometryError):
            Disk((0.0, 0.0), 0.0)

    def test_contains_disk(self):
        outer = Disk((0.0, 0.0), 2.0)
        assert outer.contains_disk(Disk((1.0, 0.0), 1.0))
        assert not outer.contains_disk(Disk((1.5, 0.0), 1.0))

    def test_degenerate_segment_rejected(self):
        with pytest.raises(GeometryError):
            Segment((1.0, 1.0), (1.0, 1.0))

    def test_clockwise_polygon_rejected(self):
        with pytest.raises(GeometryError):
            Polygon(((0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)))

    def test_non_convex_polygon_rejected(self):
        with pytest.raises(GeometryError):
            Polygon(((0.0, 0.0), (2.0, 0.0), (1.0, 0.5), (2.0, 2.0), (0.0, 2.0)))


class TestHittingMeasure:
    def test_disk(self):
        assert hitting_measure(Disk((5.0, 5.0), 2.0)) == pytest.approx(2.0 * math.pi)

    def test_segment(self):
        assert hitting_measure(Segment((0.0, 0.0), (3.0, 4.0))) == pytest.approx(5.0)

    def test_unit_square(self):
        square = Polygon(((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)))
        assert hitting_measure(square) == pytest.approx(2.0)

    def test_collinear_polygon_matches_segment(self):
        flat = Polygon(((0.0, 0.0), (2.0, 0.0)))
        assert hitting_measure(flat) == pytest.approx(hitting_measure(Segment((0.0, 0.0), (2.0, 0.0))))

    def test_perimeter_of_unsupported_body(self):
        with pytest.raises(GeometryError):
            perimeter("not a body")

    def test_monte_carlo_agrees_for_random_polygon(self):
        """Fraction of lines hitting a disk that also hit an inscribed polygon."""
        rng = np.random.default_rng(11)
        poly = random_convex_polygon(rng, 12, radius=1.0)
        phi, r = uniform_lines(rng, 200_000, (0.0, 0.0), 1.0)
        lo, hi = projection(poly, phi)
        frac = float(np.mean((r >= lo) & (r <= hi)))
        expected = hitting_measure(poly) / hitting_measure(Disk((0.0, 0.0), 1.0))
        assert frac == pytest.approx(expected, abs=0.005)


class TestRandomConvexPolygon:
    def test_vertices_inside_disk(self):
        poly = random_convex_polygon(np.random.default_rng(0), 30, radius=2.0)
        assert all(math.hypot(*v) <= 2.0 for v in poly.vertices)
        assert poly.perimeter <= 4.0 * math.pi

    def test_needs_three_points(self):
        with pytest.raises(UsageError):
            random_convex_polygon(np.random.default_rng(0), 2)


class TestProjection:
    def test_disk_support(self):
        lo, hi = projection(Disk((1.0, 0.0), 1.0), 0.0)
        assert (float(lo), float(hi)) == pytest.approx((0.0, 2.0))

    def test_vectorised_over_angles(self):
        lo, hi = projection(Segment((0.0, 0.0), (1.0, 0.0)), np.array([0.0, math.pi / 2]))
        np.testing.assert_allclose(lo, [0.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(hi, [1.0, 0.0], atol=1e-15)


# ---------------------------------------------------------------------------
# Two-body measures
# ---------------------------------------------------------------------------

class TestSegmentsIntersect:
    def test_crossing(self):
        assert segments_intersect(Segment((0, 0), (1, 1)), Segment((0, 1), (1, 0)))

    def test_touching_endpoint(self):
        assert segments_intersect(Segment((0, 0), (1, 0)), Segment((1, 0), (2, 5)))

    def test_disjoint(self):
        assert not segments_intersect(Segment((0, 0), (1, 0)), Segment((0, 1), (1, 1)))


class TestTwoSegments:
    def test_parallel_unit_segments(self):
        m = measure_lines_meeting_two_segments(Segment((0.0, 0.0), (1.0, 0.0)), Segment((0.0, 1.0), (1.0, 1.0)))
        # half of (two diagonals − two connecting sides)
        assert m == pytest.approx(math.sqrt(2.0) - 1.0, rel=1e-12)

    def test_collinear_pair_against_perpendicular(self):
        m = measure_lines_meeting_two_segments(Segment((-0.5, 0.0), (-0.75, 0.0)), Segment((0.0, 0.0), (0.0, 1.0)))
        assert m == pytest.approx((math.sqrt(5.0) - 2.0) / 4.0, abs=1e-12)

    def test_short_sides_of_rectangle(self):
        m = measure_lines_meeting_two_segments(Segment((0.0, 0.0), (1.0, 0.0)), Segment((0.0, 3.0), (1.0, 3.0)))
        assert m == pytest.approx(math.sqrt(10.0) - 3.0, abs=1e-12)

    def test_symmetric_in_arguments(self):
        s1 = Segment((0.0, 0.0), (1.0, 0.3))
        s2 = Segment((0.2, 2.0), (1.5, 1.1))
        assert measure_lines_meeting_two_segments(s1, s2) == pytest.approx(
            measure_lines_meeting_two_segments(s2, s1), rel=1e-12
        )

    def test_bounded_by_either_segment(self):
        s1 = Segment((0.0, 0.0), (1.0, 0.0))
        s2 = Segment((3.0, 1.0), (3.0, 4.0))
        m = measure_lines_meeting_two_segments(s1, s2)
        assert 0.0 < m <= min(s1.length, s2.length)

    def test_intersecting_segments_rejected(self):
        with pytest.raises(GeometryError):
            measure_lines_meeting_two_segments(Segment((0, 0), (1, 1)), Segment((0, 1), (1, 0)))


class TestTwoDisks:
    def test_closed_form(self):
        rho, dist = 0.1, 1.0
        beta = math.asin(2.0 * rho / dist)
        expected = 2.0 * rho * beta - dist * (1.0 - math.cos(beta))
        assert measure_lines_meeting_two_disks((0.0, 0.0), (1.0, 0.0), rho) == pytest.approx(expected, rel=1e-8)

    def test_rotation_invariant(self):
        a = measure_lines_meeting_two_disks((0.0, 0.0), (1.0, 0.0), 0.2)
        b = measure_lines_meeting_two_disks((0.0, 0.0), (0.6, 0.8), 0.2)
        assert a == pytest.approx(b, rel=1e-8)

    def test_zero_radius(self):
        assert measure_lines_meeting_two_disks((0.0, 0.0), (1.0, 0.0), 0.0) == 0.0

    def test_overlapping_disks_rejected(self):
        with pytest.raises(GeometryError):
            measure_lines_meeting_two_disks((0.0, 0.0), (0.3, 0.0), 0.2)

    def test_negative_radius_rejected(self):
        with pytest.raises(GeometryError):
            measure_lines_meeting_two_disks((0.0, 0.0), (1.0, 0.0), -0.1)


# ---------------------------------------------------------------------------
# Cost index
# ---------------------------------------------------------------------------

class TestCostIndex:
    def test_right_angle(self):
        assert cost_index(1.0, math.pi / 2, 1.0) == pytest.approx(1.0)

    def test_zero_cost(self):
        # 1/(v sin θ) = cot θ / w at v = 2, w = 1, θ = π/3
        assert cost_index(2.0, math.pi / 3, 1.0) == pytest.approx(0.0, abs=1e-15)

    def test_undefined_on_reference_line(self):
        with pytest.raises(GeometryError):
            cost_index(1.0, 0.0, 1.0)

    def test_speeds_must_be_positive(self):
        with pytest.raises(GeometryError):
            cost_index(0.0, 1.0, 1.0)


class TestCostIntensityDensity:
    def test_value_at_gamma_three(self):
        assert cost_intensity_density(1.0, math.pi / 2, 1.0, 3.0) == pytest.approx(1.0)

    def test_zero_outside_support(self):
        assert cost_intensity_density(-1.0, math.pi / 2, 1.0, 3.0) == 0.0

    def test_vectorised(self):
        out = cost_intensity_density(np.array([1.0, -1.0]), math.pi / 2, 1.0, 3.0)
        np.testing.assert_allclose(out, [1.0, 0.0])

    def test_needs_gamma_above_two(self):
        with pytest.raises(UsageError):
            cost_intensity_density(1.0, 1.0, 1.0, 2.0)

    def test_pushes_forward_to_speed_law(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            v, w = rng.uniform(0.1, 5.0), rng.uniform(0.2, 5.0)
            theta, gamma = rng.uniform(0.05, math.pi - 0.05), rng.uniform(2.1, 5.0)
            c = cost_index(v, theta, w)
            h = 1e-6 * v
            dc_dv = (cost_index(v + h, theta, w) - cost_index(v - h, theta, w)) / (2.0 * h)
            assert dc_dv == pytest.approx(-1.0 / (math.sin(theta) * v * v), rel=1e-5)
            pushed = cost_intensity_density(c, theta, w, gamma) * abs(dc_dv)
            assert pushed == pytest.approx(0.5 * (gamma - 1.0) * v ** -gamma, rel=1e-5)
