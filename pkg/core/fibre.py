"""
core/fibre.py - Length of a union of routes.

Routes overlap only along common carriers: a LINE piece lives on its line,
a WALK piece on the straight segment between its two graph vertices. Each
carrier gets a 1-D parametrisation, its intervals are merged, and lengths
covered once or more (union) and twice or more (shared) are read off an
event sweep. ``raster_length`` recounts the union on a fine grid along each
carrier as an independent check.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from core.arrangement import ArrangementGraph, Terminal, inject_terminal
from core.errors import ResourceCapError, UsageError
from core.geodesics import WALK, Route, shortest_time_route
from core.geometry import Disk, Point
from core.line_process import MarkedLine

logger = logging.getLogger(__name__)

DEFAULT_MAX_POINTS = 64


@dataclass(frozen=True)
class FibreStats:
    union_length: float
    shared_length: float
    total_length: float

    @property
    def sharing_fraction(self) -> float:
        return self.shared_length / self.union_length if self.union_length > 0 else 0.0


def _carrier(seg, lines: dict[int, MarkedLine]):
    """(key, origin, unit direction, t_start, t_end) of one route piece."""
    if seg.kind == WALK:
        a, b = sorted((tuple(seg.start), tuple(seg.end)))
        length = math.dist(a, b)
        if length == 0.0:
            return None
        d = ((b[0] - a[0]) / length, (b[1] - a[1]) / length)
        t0 = (seg.start[0] - a[0]) * d[0] + (seg.start[1] - a[1]) * d[1]
        t1 = (seg.end[0] - a[0]) * d[0] + (seg.end[1] - a[1]) * d[1]
        return ("w", a, b), a, d, t0, t1
    line = lines[seg.line].line
    origin = line.point_at(0.0)
    direction = line.direction
    return (
        ("l", seg.line),
        (float(origin[0]), float(origin[1])),
        (float(direction[0]), float(direction[1])),
        line.param(seg.start),
        line.param(seg.end),
    )


def _clip(origin: Point, d, lo: float, hi: float, window: Disk | None):
    if window is None:
        return lo, hi
    # Points origin + t·d inside the disk.
    ox, oy = origin[0] - window.center[0], origin[1] - window.center[1]
    b = ox * d[0] + oy * d[1]
    c = ox * ox + oy * oy - window.radius ** 2
    disc = b * b - c
    if disc < 0:
        return None
    root = math.sqrt(disc)
    lo, hi = max(lo, -b - root), min(hi, -b + root)
    return (lo, hi) if lo < hi else None


def carrier_intervals(routes, lines: dict[int, MarkedLine], window: Disk | None = None):
    """{carrier key: [(lo, hi), ...]}, one interval per route piece, clipped to window."""
    out: dict[tuple, list[tuple[float, float]]] = {}
    for route in routes:
        for seg in route.segments:
            found = _carrier(seg, lines)
            if found is None:
                continue
            key, origin, d, t0, t1 = found
            clipped = _clip(origin, d, min(t0, t1), max(t0, t1), window)
            if clipped is not None:
                out.setdefault(key, []).append(clipped)
    return out


def _coverage(intervals: list[tuple[float, float]]) -> tuple[float, float]:
    """(length covered ≥ 1 time, length covered ≥ 2 times)."""
    events = sorted([(lo, 1) for lo, _ in intervals] + [(hi, -1) for _, hi in intervals])
    once = twice = 0.0
    depth = 0
    prev = None
    for x, delta in events:
        if prev is not None and x > prev:
            if depth >= 1:
                once += x - prev
            if depth >= 2:
                twice += x - prev
        depth += delta
        prev = x
    return once, twice


def fibre_stats(routes, lines: dict[int, MarkedLine], window: Disk | None = None) -> FibreStats:
    """Union, shared and summed length of a collection of routes."""
    union = shared = total = 0.0
    for intervals in carrier_intervals(routes, lines, window).values():
        once, twice = _coverage(intervals)
        union += once
        shared += twice
        total += sum(hi - lo for lo, hi in intervals)
    return FibreStats(union, shared, total)


def raster_length(routes, lines: dict[int, MarkedLine], window: Disk | None, h: float) -> float:
    """Union length counted as h × (grid cells along each carrier whose centre is covered)."""
    if not h > 0:
        raise UsageError(f"raster step must be positive, got {h}")
    total = 0.0
    for intervals in carrier_intervals(routes, lines, window).values():
        lo = min(a for a, _ in intervals)
        hi = max(b for _, b in intervals)
        n = max(1, int(math.ceil((hi - lo) / h)))
        centres = lo + (np.arange(n) + 0.5) * h
        covered = np.zeros(n, dtype=bool)
        for a, b in intervals:
            covered |= (centres >= a) & (centres <= b)
        total += h * int(covered.sum())
    return total


# ---------------------------------------------------------------------------
# Point patterns and all-pairs routing
# ---------------------------------------------------------------------------

def poisson_points(
    rng: np.random.Generator,
    lam: float,
    window: Disk,
    max_points: int = DEFAULT_MAX_POINTS,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Poisson pattern of intensity λ in a disk, with a uniform mark per point.

    Keeping the points whose mark is ≤ λ′/λ thins the pattern to intensity
    λ′, which couples patterns across intensities.
    """
    if not lam > 0:
        raise UsageError(f"point intensity must be positive, got {lam}")
    mean = lam * math.pi * window.radius ** 2
    if mean > max_points:
        raise ResourceCapError(
            f"expected {mean:.3g} points exceeds the cap of {max_points}; lower lambda or set SIRSN_MAX_POINTS"
        )
    n = int(rng.poisson(mean))
    rho = window.radius * np.sqrt(rng.random(n))
    ang = rng.uniform(0.0, 2.0 * math.pi, n)
    pts = np.column_stack([window.center[0] + rho * np.cos(ang), window.center[1] + rho * np.sin(ang)])
    return pts, rng.random(n)


def pairwise_routes(
    graph: ArrangementGraph,
    points,
    epsilon: float,
    k_nearest: int | None = None,
) -> tuple[ArrangementGraph, list[Terminal], list[Route]]:
    """Inject every point and route each unordered pair (i < j)."""
    terminals = []
    for p in points:
        graph, term = inject_terminal(graph, (float(p[0]), float(p[1])), epsilon, k_nearest=k_nearest)
        terminals.append(term)
    routes = [
        shortest_time_route(graph, terminals[i], terminals[j])
        for i in range(len(terminals))
        for j in range(i + 1, len(terminals))
    ]
    logger.debug("routed %d pairs among %d points", len(routes), len(terminals))
    return graph, terminals, routes
