"""
Unit tests for core/geodesics.py
"""

import math

import pytest

from core.arrangement import Terminal, build, inject_terminal
from core.errors import DisconnectedError, UsageError
from core.fixtures import TRIANGLE_EPSILON, triangle_sample
from core.geodesics import (
    LINE,
    WALK,
    Route,
    RouteSegment,
    Schedule,
    converge,
    dominance_graph,
    is_stable,
    shortest_time_route,
    tree_alpha_threshold,
    tree_upper_bound,
    validate_route,
)
from core.geometry import Disk
from core.line_process import ProcessParams
from tests.conftest import make_line, make_sample

UNIT = Disk((0.0, 0.0), 1.0)


def route_between(smp, x1, x2, epsilon, **kwargs):
    g = build(smp)
    g, a = inject_terminal(g, x1, epsilon)
    g, b = inject_terminal(g, x2, epsilon)
    return shortest_time_route(g, a, b, **kwargs)


@pytest.fixture
def corner_route(cross_sample):
    """(0.5, 0) → (0, 0.5) on the cross: half a unit at speed 4, half at speed 2."""
    return route_between(cross_sample, (0.5, 0.0), (0.0, 0.5), 0.1)


# ---------------------------------------------------------------------------
# shortest_time_route
# ---------------------------------------------------------------------------

class TestShortestTimeRoute:
    def test_corner_time(self, corner_route):
        assert corner_route.total_time == pytest.approx(0.5 / 4.0 + 0.5 / 2.0)
        assert corner_route.total_length == pytest.approx(1.0)
        assert corner_route.walk_time == 0.0
        assert [s.kind for s in corner_route.segments] == [LINE, LINE]
        assert [s.line for s in corner_route.segments] == [0, 1]
        assert not corner_route.tie

    def test_vertex_path(self, corner_route):
        assert corner_route.vertex_path == ("t0", "x0-1", "t1")

    def test_walk_when_faster(self, cross_sample):
        # with a fast walk the straight line beats the network
        route = route_between(cross_sample, (0.3, 0.6), (0.6, 0.3), 10.0)
        assert route.total_time == pytest.approx(math.hypot(0.3, 0.3) / 10.0)
        assert [s.kind for s in route.segments] == [WALK]

    def test_same_terminal(self, cross_sample):
        g, a = inject_terminal(build(cross_sample), (0.5, 0.5), 0.1)
        route = shortest_time_route(g, a, a)
        assert route.segments == ()
        assert route.total_time == 0.0

    def test_unknown_terminal(self, cross_sample):
        g, a = inject_terminal(build(cross_sample), (0.5, 0.5), 0.1)
        with pytest.raises(UsageError):
            shortest_time_route(g, a, Terminal((0.0, 0.0), "missing"))

    def test_disconnected(self):
        smp = make_sample([make_line(0, 0.0, 0.5), make_line(1, 0.0, -0.5)])
        g = build(smp)
        a = Terminal(g.vertices["b0-0"].point, "b0-0")
        b = Terminal(g.vertices["b1-0"].point, "b1-0")
        with pytest.raises(DisconnectedError):
            shortest_time_route(g, a, b)

    def test_reverse_route_same_time(self, random_sample):
        fwd = route_between(random_sample, (-0.5, 0.2), (0.6, -0.1), 0.05)
        g = build(random_sample)
        g, a = inject_terminal(g, (-0.5, 0.2), 0.05)
        g, b = inject_terminal(g, (0.6, -0.1), 0.05)
        back = shortest_time_route(g, b, a)
        assert back.total_time == pytest.approx(fwd.total_time, rel=1e-12)

    def test_deterministic(self, random_sample):
        a = route_between(random_sample, (-0.5, 0.2), (0.6, -0.1), 0.05)
        b = route_between(random_sample, (-0.5, 0.2), (0.6, -0.1), 0.05)
        assert a.vertex_path == b.vertex_path
        assert a.total_time == b.total_time


class TestTies:
    def test_triangle_tie_detected(self):
        smp, src, dst = triangle_sample()
        route = route_between(smp, src, dst, TRIANGLE_EPSILON)
        assert route.tie
        assert route.tie_route is not None
        assert route.tie_route.vertex_path != route.vertex_path
        assert route.tie_route.total_time == pytest.approx(route.total_time, rel=1e-9)
        assert route.total_time == pytest.approx(1.5)

    def test_perturbation_breaks_tie(self):
        smp, src, dst = triangle_sample(1e-6)
        route = route_between(smp, src, dst, TRIANGLE_EPSILON)
        assert not route.tie
        assert any(seg.line == 2 for seg in route.segments)

    def test_looser_tolerance_keeps_tie(self):
        smp, src, dst = triangle_sample()
        route = route_between(smp, src, dst, TRIANGLE_EPSILON, tie_tol=1e-6)
        assert route.tie


# ---------------------------------------------------------------------------
# Route
# ---------------------------------------------------------------------------

class TestRoute:
    def test_position_at(self, corner_route):
        assert corner_route.position_at(0.0) == (0.5, 0.0)
        x, y = corner_route.position_at(0.125)
        assert (x, y) == pytest.approx((0.0, 0.0), abs=1e-12)
        assert corner_route.position_at(1e9) == pytest.approx((0.0, 0.5))

    def test_waypoints(self, corner_route):
        pts = corner_route.waypoints()
        assert len(pts) == 3
        assert pts[0] == (0.5, 0.0)

    def test_walk_segment(self):
        seg = RouteSegment.walk((0.0, 0.0), (3.0, 4.0), 2.0)
        assert seg.length == 5.0
        assert seg.time == 2.5


# ---------------------------------------------------------------------------
# validate_route
# ---------------------------------------------------------------------------

class TestValidateRoute:
    def test_valid_route_passes(self, cross_sample, corner_route):
        report = validate_route(corner_route, cross_sample, 0.1)
        assert report.passed
        assert report.walk_budget
        assert report.failures == []

    def test_walk_too_fast(self, cross_sample):
        route = Route((0.5, 0.5), (0.5, -0.5), (RouteSegment.walk((0.5, 0.5), (0.5, -0.5), 1.0),))
        report = validate_route(route, cross_sample, 0.1)
        assert not report.walk_speed
        assert not report.passed

    def test_walk_budget_reported_only(self, cross_sample):
        route = Route((0.5, 0.5), (0.5, -0.5), (RouteSegment.walk((0.5, 0.5), (0.5, -0.5), 0.1),))
        report = validate_route(route, cross_sample, 0.1)
        assert not report.walk_budget
        assert report.passed
        assert report.epsilon_effective == pytest.approx(10.0)

    @pytest.mark.parametrize("factor, ok", [(1.0, True), (1.01, False)])
    def test_walk_at_epsilon_allowed(self, cross_sample, factor, ok):
        route = Route((0.5, 0.5), (0.5, 0.45), (RouteSegment.walk((0.5, 0.5), (0.5, 0.45), 0.1 * factor),))
        report = validate_route(route, cross_sample, 0.1)
        assert report.walk_speed is ok
        assert report.passed is ok

    def test_unknown_line(self, cross_sample):
        seg = RouteSegment(LINE, 9, (0.0, 0.0), (0.5, 0.0), 1.0, 0.5, 0.5)
        report = validate_route(Route((0.0, 0.0), (0.5, 0.0), (seg,)), cross_sample, 0.1)
        assert not report.on_lines

    def test_over_speed_on_line(self, cross_sample):
        seg = RouteSegment(LINE, 1, (0.0, 0.0), (0.0, 0.5), 5.0, 0.5, 0.1)
        report = validate_route(Route((0.0, 0.0), (0.0, 0.5), (seg,)), cross_sample, 0.1)
        assert not report.on_lines

    def test_off_line(self, cross_sample):
        seg = RouteSegment(LINE, 1, (0.1, 0.0), (0.1, 0.5), 2.0, 0.5, 0.25)
        report = validate_route(Route((0.1, 0.0), (0.1, 0.5), (seg,)), cross_sample, 0.1)
        assert not report.on_lines

    def test_gap(self, cross_sample):
        a = RouteSegment(LINE, 0, (0.5, 0.0), (0.0, 0.0), 4.0, 0.5, 0.125)
        b = RouteSegment(LINE, 1, (0.0, 0.1), (0.0, 0.5), 2.0, 0.4, 0.2)
        report = validate_route(Route((0.5, 0.0), (0.0, 0.5), (a, b)), cross_sample, 0.1)
        assert not report.continuous


# ---------------------------------------------------------------------------
# Tree upper bound
# ---------------------------------------------------------------------------

class TestTreeUpperBound:
    def test_alpha_threshold(self):
        assert tree_alpha_threshold(3.0) == pytest.approx(4.0)
        assert tree_alpha_threshold(4.0) == pytest.approx(2.0 ** 1.5)

    def test_needs_gamma_above_two(self):
        with pytest.raises(UsageError):
            tree_alpha_threshold(2.0)

    def test_alpha_must_exceed_threshold(self, cross_sample):
        with pytest.raises(UsageError):
            tree_upper_bound((-0.5, 0.0), (0.5, 0.0), cross_sample, 4.0, 3)

    def test_distinct_points(self, cross_sample):
        with pytest.raises(UsageError):
            tree_upper_bound((0.1, 0.0), (0.1, 0.0), cross_sample, 4.4, 3)

    def test_depth_zero_walks(self, cross_sample):
        tree = tree_upper_bound((-0.5, 0.01), (0.5, 0.01), cross_sample, 4.4, 0)
        assert [s.kind for s in tree.segments] == [WALK]
        assert tree.total_time == pytest.approx(1.0 / cross_sample.v_floor)
        assert tree.fallbacks == 0

    def test_uses_fast_line(self, cross_sample):
        tree = tree_upper_bound((-0.5, 0.01), (0.5, 0.01), cross_sample, 4.4, 3)
        # two 0.01 walks at the floor speed 2 around one unit on the speed-4 line
        assert tree.total_time == pytest.approx(0.25 + 0.02 / 2.0)
        assert tree.tree_nodes[0].line == 0
        assert tree.fallbacks == 2
        assert validate_route(tree, cross_sample, cross_sample.v_floor).passed

    def test_dominated_by_graph_optimum(self, random_sample):
        alpha = 1.1 * tree_alpha_threshold(3.0)
        tree = tree_upper_bound((-0.4, 0.1), (0.5, -0.2), random_sample, alpha, 4)
        g, terms = dominance_graph(random_sample, tree, random_sample.v_floor)
        best = shortest_time_route(g, terms[0], terms[-1])
        assert best.total_time <= tree.total_time * (1.0 + 1e-9)

    def test_dominated_by_plain_route(self, cross_sample):
        x1, x2 = (-0.5, 0.01), (0.5, 0.01)
        tree = tree_upper_bound(x1, x2, cross_sample, 4.4, 3)
        best = route_between(cross_sample, x1, x2, cross_sample.v_floor)
        assert best.total_time == pytest.approx(0.26)
        assert best.total_time <= tree.total_time * (1.0 + 1e-9)


# ---------------------------------------------------------------------------
# Schedules and convergence
# ---------------------------------------------------------------------------

class TestSchedule:
    def test_default(self):
        s = Schedule.default()
        assert s.levels == 5
        assert s.v_floors[-1] == pytest.approx(1.0 / 16.0)
        assert s.epsilons[-1] == pytest.approx(0.003125)
        assert s.k_nearest == (16, 24, 32, 48, 64)

    def test_truncated(self):
        assert Schedule.default().truncated(2).levels == 2

    def test_coupled(self):
        s = Schedule.coupled((1.0, 0.5), 0.05, 32)
        assert s.epsilons == (0.05, 0.05)
        assert s.k_nearest == (32, 32)

    def test_must_refine(self):
        with pytest.raises(UsageError):
            Schedule((0.5, 1.0), (0.05, 0.05), (16, 16))

    def test_no_repeated_level(self):
        with pytest.raises(UsageError):
            Schedule((1.0, 1.0), (0.05, 0.05), (16, 24))

    def test_lengths_must_match(self):
        with pytest.raises(UsageError):
            Schedule((1.0, 0.5), (0.05,), (16, 24))


class TestIsStable:
    def test_stable(self):
        assert is_stable([2.0, 1.0, 1.005])

    def test_unstable(self):
        assert not is_stable([1.0, 0.9])

    def test_single_level(self):
        assert not is_stable([1.0])


class TestConverge:
    def test_coupled_levels_monotone(self):
        schedule = Schedule.coupled((1.0, 0.5, 0.25), 0.05, 64)
        report = converge((-0.5, 0.0), (0.5, 0.0), ProcessParams(3.0, 42), schedule, UNIT)
        times = [row.time for row in report.levels]
        assert len(times) == 3
        assert report.monotone
        assert all(b <= a * (1.0 + 1e-12) for a, b in zip(times, times[1:]))
        assert report.final_time == times[-1]
        assert not report.truncated

    def test_lines_persist_across_levels(self):
        schedule = Schedule.coupled((1.0, 0.5), 0.05, 64)
        report = converge((-0.5, 0.0), (0.5, 0.0), ProcessParams(3.0, 42), schedule, UNIT)
        n = [row.n_lines for row in report.levels]
        assert n[1] >= n[0]
        assert report.final_sample.v_floor == 0.5

    def test_truncated_by_cap(self):
        schedule = Schedule.coupled((1.0, 0.5, 0.25), 0.05, 64)
        report = converge((-0.5, 0.0), (0.5, 0.0), ProcessParams(3.0, 42), schedule, UNIT, max_lines=20)
        assert report.truncated
        assert len(report.levels) == 2
        assert math.isfinite(report.final_time)

    def test_needs_gamma_above_two(self):
        with pytest.raises(UsageError):
            converge((-0.5, 0.0), (0.5, 0.0), ProcessParams(2.0, 1), Schedule.default(), UNIT)
