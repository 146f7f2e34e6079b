"""
core/geodesics.py - Minimum-time routing on an arrangement.

shortest_time_route   Dijkstra with a fully specified tie order
                      (total time, hop count, lexicographic vertex ids) and a
                      second search from the destination to detect ties.
validate_route        checks a route against the speed rules: LINE pieces on
                      their lines at their speed, WALK pieces no faster than
                      ε, and (reported only) total WALK time below ε.
tree_upper_bound      the recursive construction that links two points by
                      the fastest line passing near both, then recurses on
                      the two gaps.
converge              reruns the routing on coupled refinements of one
                      sample and reports how the time settles.
"""

import heapq
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from core.arrangement import (
    DEFAULT_MAX_INTERSECTIONS,
    ArrangementGraph,
    Terminal,
    access_lines,
    build,
    inject_terminal,
)
from core.errors import DisconnectedError, ResourceCapError, UsageError
from core.geometry import Disk, Point
from core.line_process import DEFAULT_MAX_LINES, LineSample, ProcessParams, refine, sample

logger = logging.getLogger(__name__)

LINE = "LINE"
WALK = "WALK"
TIE_TOL = 1e-9
STABILITY_TOL = 0.01
# Rounding allowance for comparing times of coupled levels.
MONOTONE_SLACK = 1e-12


# ---------------------------------------------------------------------------
# Route
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RouteSegment:
    kind: str
    line: int | None
    start: Point
    end: Point
    speed: float
    length: float
    time: float

    @classmethod
    def walk(cls, start: Point, end: Point, speed: float) -> "RouteSegment":
        length = math.dist(start, end)
        return cls(WALK, None, start, end, speed, length, length / speed)


@dataclass(frozen=True)
class TreeNode:
    level: int
    separation: float
    line: int | None
    speed: float


@dataclass(frozen=True)
class Route:
    """
    A piecewise-linear route. ``vertex_path`` is the graph path it came from
    (empty for constructed routes); ``tie_route`` holds a distinct route
    whose time is within the tie tolerance, when one was found.
    """

    start: Point
    end: Point
    segments: tuple[RouteSegment, ...] = ()
    vertex_path: tuple[str, ...] = ()
    tie: bool = False
    tie_route: "Route | None" = None
    fallbacks: int = 0
    tree_nodes: tuple[TreeNode, ...] = ()

    @property
    def total_time(self) -> float:
        return math.fsum(s.time for s in self.segments)

    @property
    def total_length(self) -> float:
        return math.fsum(s.length for s in self.segments)

    @property
    def walk_time(self) -> float:
        return math.fsum(s.time for s in self.segments if s.kind == WALK)

    @property
    def endpoints(self) -> tuple[Point, Point]:
        return self.start, self.end

    def waypoints(self) -> list[Point]:
        """Start, every segment end, without consecutive duplicates."""
        points = [self.start]
        for seg in self.segments:
            if seg.start != points[-1]:
                points.append(seg.start)
            if seg.end != points[-1]:
                points.append(seg.end)
        if points[-1] != self.end:
            points.append(self.end)
        return points

    def position_at(self, t: float) -> Point:
        """Point reached after travelling for time t (clamped to the route)."""
        if t <= 0.0 or not self.segments:
            return self.start
        elapsed = 0.0
        for seg in self.segments:
            if seg.time > 0.0 and t <= elapsed + seg.time:
                f = (t - elapsed) / seg.time
                return (
                    seg.start[0] + f * (seg.end[0] - seg.start[0]),
                    seg.start[1] + f * (seg.end[1] - seg.start[1]),
                )
            elapsed += seg.time
        return self.segments[-1].end


def _route_from_path(graph: ArrangementGraph, path: list[str], start: Point, end: Point) -> Route:
    segments = []
    for a, b in zip(path, path[1:]):
        edge = graph.edges[graph.adjacency[a][b]]
        segments.append(RouteSegment(
            WALK if edge.is_walk else LINE,
            edge.line,
            graph.vertices[a].point,
            graph.vertices[b].point,
            edge.speed,
            edge.length,
            edge.time,
        ))
    return Route(start, end, tuple(segments), tuple(path))


# ---------------------------------------------------------------------------
# Dijkstra
# ---------------------------------------------------------------------------

def _path_to(parent: dict[str, str | None], v: str) -> list[str]:
    path = []
    while v is not None:
        path.append(v)
        v = parent[v]
    path.reverse()
    return path


def _dijkstra(
    graph: ArrangementGraph,
    source: str,
    target: str | None = None,
    cutoff: float = math.inf,
) -> tuple[dict[str, float], dict[str, str | None]]:
    """
    Settled distances and parents from ``source``.

    Labels are ordered by (time, hops, vertex path); the search stops once
    ``target`` is settled or the next label exceeds ``cutoff``.
    """
    dist: dict[str, float] = {source: 0.0}
    hops: dict[str, int] = {source: 0}
    parent: dict[str, str | None] = {source: None}
    settled: set[str] = set()
    heap = [(0.0, 0, source)]
    while heap:
        d, h, u = heapq.heappop(heap)
        if u in settled or d != dist[u] or h != hops[u]:
            continue
        if d > cutoff:
            break
        settled.add(u)
        if u == target:
            break
        for w, edge in graph.neighbours(u):
            if w in settled:
                continue
            nd, nh = d + edge.time, h + 1
            old = (dist.get(w, math.inf), hops.get(w, 0))
            if (nd, nh) < old:
                better = True
            elif (nd, nh) == old:
                better = _path_to(parent, u) < _path_to(parent, parent[w])
            else:
                better = False
            if better:
                dist[w], hops[w], parent[w] = nd, nh, u
                heapq.heappush(heap, (nd, nh, w))
    return {v: dist[v] for v in settled}, parent


def _check_terminal(graph: ArrangementGraph, terminal: Terminal) -> None:
    if terminal.vertex not in graph.vertices:
        raise UsageError(f"terminal {terminal.vertex} was not injected into this graph")


def shortest_time_route(
    graph: ArrangementGraph,
    src: Terminal,
    dst: Terminal,
    tie_tol: float = TIE_TOL,
) -> Route:
    """
    Minimum-time route between two injected terminals.

    Parameters
    ----------
    graph:   Arrangement holding both terminals.
    src:     Start terminal.
    dst:     End terminal.
    tie_tol: Relative tolerance under which a distinct route counts as tied.

    Returns
    -------
    Route with ``tie`` set (and ``tie_route`` filled) when another route is
    within tie_tol of the optimum.

    Raises
    ------
    UsageError        if a terminal is not part of the graph.
    DisconnectedError if no path joins the terminals.
    """
    _check_terminal(graph, src)
    _check_terminal(graph, dst)
    if src.vertex == dst.vertex:
        return Route(src.point, dst.point, (), (src.vertex,))

    ds, parent = _dijkstra(graph, src.vertex, target=dst.vertex)
    if dst.vertex not in ds:
        raise DisconnectedError(f"no route between {src.vertex} and {dst.vertex}")
    path = _path_to(parent, dst.vertex)
    route = _route_from_path(graph, path, src.point, dst.point)
    total = ds[dst.vertex]
    logger.debug("route %s -> %s: time %.6g, %d hops", src.vertex, dst.vertex, total, len(path) - 1)

    tie = _find_tie(graph, path, total, tie_tol)
    if tie is None:
        return route
    return Route(
        route.start, route.end, route.segments, route.vertex_path,
        tie=True, tie_route=_route_from_path(graph, tie, src.point, dst.point),
    )


def _find_tie(graph: ArrangementGraph, path: list[str], total: float, tie_tol: float) -> list[str] | None:
    """
    A simple path distinct from ``path`` whose time is within tie_tol of it.

    Any such path leaves the optimal one through some edge (u, w); that edge
    satisfies d_src(u) + t(u, w) + d_dst(w) ≤ T(1 + tie_tol).
    """
    bound = total * (1.0 + tie_tol)
    ds, ps = _dijkstra(graph, path[0], cutoff=bound)
    dt, pt = _dijkstra(graph, path[-1], cutoff=bound)
    on_path = {frozenset(pair) for pair in zip(path, path[1:])}
    for u in sorted(ds):
        for w, edge in graph.neighbours(u):
            if w not in dt or frozenset((u, w)) in on_path:
                continue
            if ds[u] + edge.time + dt[w] > bound:
                continue
            candidate = _path_to(ps, u) + _path_to(pt, w)[::-1]
            if len(set(candidate)) == len(candidate) and candidate != path:
                return candidate
    return None


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    """
    Per-clause outcome of checking a route; ``passed`` covers the hard rules.

    ``walk_speed`` uses the closed bound, speed <= ε: WALK edges are built to
    run at exactly ε, so the boundary counts as compliant.
    """

    on_lines: bool = True
    walk_speed: bool = True
    walk_budget: bool = True
    continuous: bool = True
    epsilon_effective: float = 0.0
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.on_lines and self.walk_speed and self.continuous


def validate_route(route: Route, sample: LineSample, epsilon: float, tol: float = 1e-9) -> ValidationReport:
    """
    Check a route against the line speeds of ``sample`` and the walk speed ε.

    LINE pieces must lie on their line (within tol, relative to the window
    radius) and move no faster than it; WALK pieces may move at ε but not
    faster. The total WALK time is compared against ε and reported, never
    enforced.
    ``epsilon_effective`` is max(largest WALK speed, total WALK time).
    """
    report = ValidationReport()
    scale = tol * max(1.0, sample.window.radius)
    lines = sample.by_id
    max_walk = 0.0

    for k, seg in enumerate(route.segments):
        if seg.kind == WALK:
            max_walk = max(max_walk, seg.speed)
            if seg.speed > epsilon:
                report.walk_speed = False
                report.failures.append(f"segment {k}: walk speed {seg.speed} exceeds {epsilon}")
            continue
        ml = lines.get(seg.line)
        if ml is None:
            report.on_lines = False
            report.failures.append(f"segment {k}: line {seg.line} is not in the sample")
            continue
        if seg.speed > ml.v * (1.0 + 1e-12):
            report.on_lines = False
            report.failures.append(f"segment {k}: speed {seg.speed} exceeds line speed {ml.v}")
        for p in (seg.start, seg.end):
            if ml.distance(p) > scale:
                report.on_lines = False
                report.failures.append(f"segment {k}: {p} is off line {seg.line}")

    points = [route.start] + [p for s in route.segments for p in (s.start, s.end)] + [route.end]
    if route.segments:
        for k in range(0, len(points), 2):
            if math.dist(points[k], points[k + 1]) > scale:
                report.continuous = False
                report.failures.append(f"gap between {points[k]} and {points[k + 1]}")

    walk_time = route.walk_time
    if walk_time >= epsilon and walk_time > 0.0:
        report.walk_budget = False
        report.failures.append(f"walk time {walk_time:.6g} is not below epsilon {epsilon}")
    report.epsilon_effective = max(max_walk, walk_time)
    return report


# ---------------------------------------------------------------------------
# Tree upper bound
# ---------------------------------------------------------------------------

def require_routing_gamma(gamma: float) -> None:
    if not gamma > 2:
        raise UsageError(f"routing needs gamma > 2, got {gamma}")


def tree_alpha_threshold(gamma: float) -> float:
    """Smallest admissible ball-shrinking factor, 2^((γ−1)/(γ−2))."""
    require_routing_gamma(gamma)
    return 2.0 ** ((gamma - 1.0) / (gamma - 2.0))


def tree_upper_bound(
    x1: Point,
    x2: Point,
    sample: LineSample,
    alpha: float,
    depth: int,
    epsilon: float | None = None,
) -> Route:
    """
    Link x1 and x2 by the recursive fastest-line construction.

    At each node with endpoints a, b (separation r) the fastest line within
    r/α of both points carries the middle piece between the closest points
    on its window chord; the two gaps recurse one level deeper. Nodes at the
    final level, and nodes no line qualifies for, are closed by a WALK at
    speed ε (default: the sample's speed floor). The latter are counted in
    ``Route.fallbacks``.
    """
    if not alpha > tree_alpha_threshold(sample.gamma):
        raise UsageError(
            f"alpha must exceed {tree_alpha_threshold(sample.gamma):.6g} at gamma={sample.gamma}, got {alpha}"
        )
    if depth < 0:
        raise UsageError(f"depth must be non-negative, got {depth}")
    x1 = (float(x1[0]), float(x1[1]))
    x2 = (float(x2[0]), float(x2[1]))
    if x1 == x2:
        raise UsageError("tree_upper_bound needs two distinct points")
    epsilon = sample.v_floor if epsilon is None else epsilon
    if not epsilon > 0:
        raise UsageError(f"epsilon must be positive, got {epsilon}")

    rows = [(ml, ml.support(sample.window)) for ml in sample.lines]
    rows = [(ml, sup) for ml, sup in rows if sup is not None]
    ids = np.array([ml.id for ml, _ in rows], dtype=np.int64)
    v = np.array([ml.v for ml, _ in rows], dtype=float)
    phi = np.array([ml.phi for ml, _ in rows], dtype=float)
    r = np.array([ml.r for ml, _ in rows], dtype=float)
    t0 = np.array([sup[0] for _, sup in rows], dtype=float)
    t1 = np.array([sup[1] for _, sup in rows], dtype=float)
    cos, sin = np.cos(phi), np.sin(phi)

    def feet(p: Point):
        t = np.clip(-p[0] * sin + p[1] * cos, t0, t1)
        fx = r * cos - t * sin
        fy = r * sin + t * cos
        return t, np.hypot(fx - p[0], fy - p[1]), fx, fy

    segments: list[RouteSegment] = []
    nodes: list[TreeNode] = []
    fallbacks = 0

    def connect(a: Point, b: Point, level: int) -> None:
        nonlocal fallbacks
        sep = math.dist(a, b)
        if sep == 0.0:
            return
        if level >= depth or not len(rows):
            if level < depth:
                fallbacks += 1
            nodes.append(TreeNode(level, sep, None, epsilon))
            segments.append(RouteSegment.walk(a, b, epsilon))
            return
        ta, da, ax, ay = feet(a)
        tb, db, bx, by = feet(b)
        ok = (da <= sep / alpha) & (db <= sep / alpha)
        if not ok.any():
            fallbacks += 1
            nodes.append(TreeNode(level, sep, None, epsilon))
            segments.append(RouteSegment.walk(a, b, epsilon))
            return
        # Fastest qualifying line; lowest id on equal speeds.
        cand = np.flatnonzero(ok)
        k = cand[np.lexsort((ids[cand], -v[cand]))[0]]
        fa = (float(ax[k]), float(ay[k]))
        fb = (float(bx[k]), float(by[k]))
        nodes.append(TreeNode(level, sep, int(ids[k]), float(v[k])))
        connect(a, fa, level + 1)
        length = abs(float(tb[k] - ta[k]))
        if length > 0.0:
            segments.append(RouteSegment(LINE, int(ids[k]), fa, fb, float(v[k]), length, length / float(v[k])))
        connect(fb, b, level + 1)

    connect(x1, x2, 0)
    if fallbacks:
        logger.debug("tree bound: %d nodes fell back to walking", fallbacks)
    return Route(x1, x2, tuple(segments), (), fallbacks=fallbacks, tree_nodes=tuple(nodes))


def dominance_graph(
    sample: LineSample,
    route: Route,
    epsilon: float,
    max_intersections: int = DEFAULT_MAX_INTERSECTIONS,
) -> tuple[ArrangementGraph, list[Terminal]]:
    """
    Arrangement of ``sample`` with every waypoint of ``route`` injected.

    Each LINE piece of the route joins two waypoints lying on its line and
    each WALK piece joins two terminals directly, so the route is a path of
    this graph and its optimum between the first and last terminal is at
    most the route's time.
    """
    graph = build(sample, max_intersections=max_intersections)
    terminals = []
    for p in route.waypoints():
        graph, term = inject_terminal(graph, p, epsilon)
        terminals.append(term)
    return graph, terminals


# ---------------------------------------------------------------------------
# Convergence driver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Schedule:
    """Refinement levels: v_floors and epsilons nonincreasing, k_nearest nondecreasing."""

    v_floors: tuple[float, ...]
    epsilons: tuple[float, ...]
    k_nearest: tuple[int, ...]

    def __post_init__(self) -> None:
        n = len(self.v_floors)
        if n == 0 or len(self.epsilons) != n or len(self.k_nearest) != n:
            raise UsageError("schedule needs equally many v_floors, epsilons and k_nearest values")
        if min(self.v_floors) <= 0 or min(self.epsilons) <= 0 or min(self.k_nearest) < 1:
            raise UsageError("schedule values must be positive")
        for k in range(1, n):
            vf, vf0 = self.v_floors[k], self.v_floors[k - 1]
            ep, ep0 = self.epsilons[k], self.epsilons[k - 1]
            if vf > vf0 or ep > ep0 or self.k_nearest[k] < self.k_nearest[k - 1]:
                raise UsageError(f"schedule level {k} does not refine level {k - 1}")
            if vf == vf0 and ep == ep0:
                raise UsageError(f"schedule level {k} repeats level {k - 1}")

    @classmethod
    def default(cls) -> "Schedule":
        """Floors 1 → 1/16 and ε 0.05 → 0.003125, halving together, with k 16 → 64."""
        return cls(
            tuple(2.0 ** -k for k in range(5)),
            tuple(0.05 * 2.0 ** -k for k in range(5)),
            (16, 24, 32, 48, 64),
        )

    @classmethod
    def coupled(cls, v_floors, epsilon: float, k_nearest: int) -> "Schedule":
        """Refine the floor only, with fixed ε and access degree."""
        n = len(v_floors)
        return cls(tuple(v_floors), (epsilon,) * n, (k_nearest,) * n)

    @property
    def levels(self) -> int:
        return len(self.v_floors)

    def truncated(self, levels: int) -> "Schedule":
        levels = max(1, levels)
        return Schedule(self.v_floors[:levels], self.epsilons[:levels], self.k_nearest[:levels])


@dataclass(frozen=True)
class LevelResult:
    level: int
    v_floor: float
    epsilon: float
    k_nearest: int
    time: float
    length: float
    walk_time: float
    n_lines: int
    n_vertices: int
    tie: bool = False


@dataclass
class ConvergenceReport:
    levels: list[LevelResult] = field(default_factory=list)
    routes: list[Route] = field(default_factory=list)
    stabilized: bool = False
    truncated: bool = False
    monotone: bool = True
    final_time: float = math.nan
    final_sample: LineSample | None = None


def is_stable(times: list[float], tol: float = STABILITY_TOL) -> bool:
    """True when the last two times differ by less than tol (relative)."""
    if len(times) < 2:
        return False
    a, b = times[-2], times[-1]
    if a == 0.0:
        return b == 0.0
    return abs(b - a) < tol * abs(a)


def converge(
    x1: Point,
    x2: Point,
    params: ProcessParams,
    schedule: Schedule,
    window: Disk,
    max_lines: int = DEFAULT_MAX_LINES,
    max_intersections: int = DEFAULT_MAX_INTERSECTIONS,
    stability_tol: float = STABILITY_TOL,
    tie_tol: float = TIE_TOL,
) -> ConvergenceReport:
    """
    Route x1 → x2 on coupled refinements of one sample.

    Every level lowers the floor with ``refine`` (so earlier lines persist),
    rebuilds the arrangement and re-injects both endpoints. Lines an endpoint
    accessed on the previous level keep their access feet, so at fixed ε the
    level optima can only decrease.

    A ResourceCapError on some level ends the run; the report then covers the
    completed levels and has ``truncated`` set.
    """
    require_routing_gamma(params.gamma)
    report = ConvergenceReport()
    current: LineSample | None = None
    keep1: set[int] = set()
    keep2: set[int] = set()
    for level, (v_floor, eps, k) in enumerate(zip(schedule.v_floors, schedule.epsilons, schedule.k_nearest)):
        try:
            if current is None:
                current = sample(params, window, v_floor, max_lines=max_lines)
            elif v_floor < current.v_floor:
                current = refine(current, v_floor, max_lines=max_lines)
            graph = build(current, window, max_intersections=max_intersections)
        except ResourceCapError as exc:
            logger.warning("level %d stopped the schedule: %s", level, exc)
            report.truncated = True
            break
        graph, t1 = inject_terminal(graph, x1, eps, k_nearest=k, keep_lines=keep1)
        graph, t2 = inject_terminal(graph, x2, eps, k_nearest=k, keep_lines=keep2)
        route = shortest_time_route(graph, t1, t2, tie_tol=tie_tol)
        keep1 |= access_lines(graph, t1)
        keep2 |= access_lines(graph, t2)
        row = LevelResult(
            level, v_floor, eps, k,
            route.total_time, route.total_length, route.walk_time,
            len(current.lines), len(graph.vertices), route.tie,
        )
        logger.debug("level %d: v_floor=%.4g eps=%.4g time=%.6g", level, v_floor, eps, row.time)
        report.levels.append(row)
        report.routes.append(route)

    times = [row.time for row in report.levels]
    report.stabilized = is_stable(times, stability_tol)
    report.monotone = all(b <= a * (1.0 + MONOTONE_SLACK) for a, b in zip(times, times[1:]))
    report.final_time = times[-1] if times else math.nan
    report.final_sample = current
    return report
