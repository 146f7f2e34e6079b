"""
Unit tests for core/fibre.py
"""

import math

import numpy as np
import pytest

from core.arrangement import build
from core.errors import ResourceCapError, UsageError
from core.fibre import (
    _coverage,
    carrier_intervals,
    fibre_stats,
    pairwise_routes,
    poisson_points,
    raster_length,
)
from core.geodesics import LINE, Route, RouteSegment
from core.geometry import Disk


def _on_x_axis(x0: float, x1: float, v: float = 4.0) -> Route:
    seg = RouteSegment(LINE, 0, (x0, 0.0), (x1, 0.0), v, abs(x1 - x0), abs(x1 - x0) / v)
    return Route((x0, 0.0), (x1, 0.0), (seg,))


class TestCoverage:
    def test_overlap_and_gap(self):
        once, twice = _coverage([(0.0, 1.0), (0.5, 2.0), (3.0, 4.0)])
        assert once == pytest.approx(3.0)
        assert twice == pytest.approx(0.5)

    def test_nested(self):
        once, twice = _coverage([(0.0, 4.0), (1.0, 2.0), (1.5, 3.0)])
        assert once == pytest.approx(4.0)
        assert twice == pytest.approx(2.0)

    def test_touching_intervals_share_nothing(self):
        once, twice = _coverage([(0.0, 1.0), (1.0, 2.0)])
        assert once == pytest.approx(2.0)
        assert twice == 0.0


class TestFibreStats:
    def test_overlapping_line_routes(self, cross_sample):
        routes = [_on_x_axis(-0.5, 0.5), _on_x_axis(0.0, 0.8)]
        stats = fibre_stats(routes, cross_sample.by_id)
        assert stats.union_length == pytest.approx(1.3)
        assert stats.shared_length == pytest.approx(0.5)
        assert stats.total_length == pytest.approx(1.8)
        assert stats.sharing_fraction == pytest.approx(0.5 / 1.3)

    def test_direction_does_not_matter(self, cross_sample):
        stats = fibre_stats([_on_x_axis(-0.5, 0.5), _on_x_axis(0.5, -0.5)], cross_sample.by_id)
        assert stats.union_length == pytest.approx(1.0)
        assert stats.shared_length == pytest.approx(1.0)

    def test_window_clips(self, cross_sample):
        routes = [_on_x_axis(-0.5, 0.5), _on_x_axis(0.0, 0.8)]
        stats = fibre_stats(routes, cross_sample.by_id, Disk((0.0, 0.0), 0.6))
        assert stats.union_length == pytest.approx(1.1)
        assert stats.shared_length == pytest.approx(0.5)

    def test_walks_share_their_segment(self, cross_sample):
        a, b = (0.1, 0.2), (0.4, 0.6)
        there = Route(a, b, (RouteSegment.walk(a, b, 0.5),))
        back = Route(b, a, (RouteSegment.walk(b, a, 0.5),))
        stats = fibre_stats([there, back], cross_sample.by_id)
        assert stats.union_length == pytest.approx(0.5)
        assert stats.shared_length == pytest.approx(0.5)
        assert len(carrier_intervals([there, back], cross_sample.by_id)) == 1

    def test_different_lines_never_share(self, cross_sample):
        up = RouteSegment(LINE, 1, (0.0, -0.5), (0.0, 0.5), 2.0, 1.0, 0.5)
        routes = [_on_x_axis(-0.5, 0.5), Route((0.0, -0.5), (0.0, 0.5), (up,))]
        stats = fibre_stats(routes, cross_sample.by_id)
        assert stats.union_length == pytest.approx(2.0)
        assert stats.shared_length == 0.0

    def test_empty(self, cross_sample):
        stats = fibre_stats([], cross_sample.by_id)
        assert stats.union_length == 0.0
        assert stats.sharing_fraction == 0.0


class TestRasterLength:
    def test_close_to_union(self, cross_sample):
        routes = [_on_x_axis(-0.5, 0.5), _on_x_axis(0.0, 0.8)]
        assert raster_length(routes, cross_sample.by_id, None, 1e-3) == pytest.approx(1.3, abs=2e-3)

    def test_step_must_be_positive(self, cross_sample):
        with pytest.raises(UsageError):
            raster_length([], cross_sample.by_id, None, 0.0)


class TestPoissonPoints:
    def test_points_in_window(self):
        window = Disk((1.0, -1.0), 1.0)
        pts, marks = poisson_points(np.random.default_rng(0), 5.0, window)
        assert pts.shape == (len(marks), 2)
        assert np.all(np.hypot(pts[:, 0] - 1.0, pts[:, 1] + 1.0) <= 1.0)
        assert np.all((marks >= 0.0) & (marks < 1.0))

    def test_mean_count(self):
        rng = np.random.default_rng(1)
        counts = [len(poisson_points(rng, 3.0, Disk((0.0, 0.0), 1.0))[1]) for _ in range(2000)]
        se = math.sqrt(3.0 * math.pi / 2000)
        assert np.mean(counts) == pytest.approx(3.0 * math.pi, abs=4 * se)

    def test_cap(self):
        with pytest.raises(ResourceCapError):
            poisson_points(np.random.default_rng(0), 1000.0, Disk((0.0, 0.0), 1.0))

    def test_intensity_must_be_positive(self):
        with pytest.raises(UsageError):
            poisson_points(np.random.default_rng(0), 0.0, Disk((0.0, 0.0), 1.0))


class TestPairwiseRoutes:
    def test_routes_every_pair(self, grid_sample):
        points = [(0.5, 0.5), (-0.5, 0.5), (0.5, -0.5), (-0.5, -0.5)]
        graph, terminals, routes = pairwise_routes(build(grid_sample), points, 0.1)
        assert len(terminals) == 4
        assert len(routes) == 6
        assert all(math.isfinite(r.total_time) and r.total_time > 0 for r in routes)
        assert all(t.vertex in graph.vertices for t in terminals)
