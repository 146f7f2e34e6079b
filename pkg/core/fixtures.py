"""
core/fixtures.py - Deterministic line configurations.

forcing      two nested squares joined by the y-axis; with fast enough sides
             every fastest route from inside the small square to outside the
             big one passes through A = (0, −1) and B = (0, −3)
triangle     three unit-speed lines through the sides of an equilateral
             triangle; the two ways round from the base midpoint to the apex
             take exactly equal time
clusters     two disks of endpoints for the dumbbell network figure
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from core.geometry import Disk, Line, Point
from core.line_process import LineSample, MarkedLine, ProcessParams, sample

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Forcing structure
# ---------------------------------------------------------------------------

FORCING_A: Point = (0.0, -1.0)
FORCING_B: Point = (0.0, -3.0)
SMALL_SQUARE = (-1.0, -1.0, 1.0, 1.0)      # xmin, ymin, xmax, ymax
BIG_SQUARE = (-5.0, -3.0, 5.0, 7.0)
FORCING_WINDOW = Disk((0.0, 2.0), 9.0)
FORCING_EPSILON = 1.0
BACKGROUND_FLOOR = 0.5
BACKGROUND_MAX_SPEED = 1.0
BACKGROUND_GAMMA = 3.0
STRUCTURE_LINES = 9


def _square_sides(box, v: float, first_id: int) -> list[MarkedLine]:
    x0, y0, x1, y1 = box
    corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    return [
        MarkedLine.segment(first_id + k, corners[k], corners[(k + 1) % 4], v)
        for k in range(4)
    ]


@dataclass(frozen=True)
class ForcingFixture:
    """Speeds a (small square), b (y-axis) and c (big square)."""

    a: float = 7.0
    b: float = 14.0
    c: float = 141.0

    @property
    def chain_holds(self) -> bool:
        """c > 10b > 59a/3 > 354/3."""
        return self.c > 10 * self.b > 59 * self.a / 3 > 354 / 3

    def structure_lines(self) -> list[MarkedLine]:
        """Ids 0-3 small square, 4 the y-axis, 5-8 big square."""
        lines = _square_sides(SMALL_SQUARE, self.a, 0)
        lines.append(MarkedLine(4, Line(0.0, 0.0), self.b))
        lines += _square_sides(BIG_SQUARE, self.c, 5)
        return lines

    def sample(self, seed: int) -> LineSample:
        """
        Structure lines plus a background of speeds in [0.5, 1].

        Background lines come from an ordinary sample at floor 0.5 with the
        lines faster than 1 removed, which is the process conditioned on no
        such line.
        """
        params = ProcessParams(BACKGROUND_GAMMA, seed)
        background = sample(params, FORCING_WINDOW, BACKGROUND_FLOOR)
        kept = [
            MarkedLine(STRUCTURE_LINES + ml.id, ml.line, ml.v)
            for ml in background.lines
            if ml.v <= BACKGROUND_MAX_SPEED
        ]
        return LineSample(params, FORCING_WINDOW, BACKGROUND_FLOOR, tuple(self.structure_lines() + kept))


def _inside(box, p: Point) -> bool:
    return box[0] <= p[0] <= box[2] and box[1] <= p[1] <= box[3]


def forcing_endpoints(rng: np.random.Generator) -> tuple[Point, Point]:
    """x1 uniform in the open small square, x2 uniform in the window outside the big square."""
    x0, y0, x1, y1 = SMALL_SQUARE
    while True:
        p = (float(rng.uniform(x0, x1)), float(rng.uniform(y0, y1)))
        if x0 < p[0] < x1 and y0 < p[1] < y1:
            break
    c, r = FORCING_WINDOW.center, FORCING_WINDOW.radius
    while True:
        rho = r * math.sqrt(rng.random())
        ang = rng.uniform(0.0, 2.0 * math.pi)
        q = (c[0] + rho * math.cos(ang), c[1] + rho * math.sin(ang))
        if not _inside(BIG_SQUARE, q):
            return p, q


def distance_to_route(route, p: Point) -> float:
    """Smallest distance from p to the route's polyline."""
    best = math.dist(route.start, p)
    for seg in route.segments:
        ax, ay = seg.start
        bx, by = seg.end
        dx, dy = bx - ax, by - ay
        den = dx * dx + dy * dy
        f = 0.0 if den == 0.0 else min(1.0, max(0.0, ((p[0] - ax) * dx + (p[1] - ay) * dy) / den))
        best = min(best, math.hypot(ax + f * dx - p[0], ay + f * dy - p[1]))
    return best


# ---------------------------------------------------------------------------
# Equilateral triangle
# ---------------------------------------------------------------------------

TRIANGLE = ((0.0, 0.0), (1.0, 0.0), (0.5, math.sqrt(3.0) / 2.0))
TRIANGLE_EPSILON = 0.05


def triangle_sample(perturbation: float = 0.0) -> tuple[LineSample, Point, Point]:
    """
    Full unit-speed lines through the three sides, in a radius-2 window
    about the centroid. ``perturbation`` speeds up the left side.

    Returns (sample, base midpoint, apex).
    """
    p, q, apex = TRIANGLE
    lines = (
        MarkedLine(0, Line.from_points(p, q), 1.0),
        MarkedLine(1, Line.from_points(q, apex), 1.0),
        MarkedLine(2, Line.from_points(apex, p), 1.0 + perturbation),
    )
    centroid = ((p[0] + q[0] + apex[0]) / 3.0, (p[1] + q[1] + apex[1]) / 3.0)
    window = Disk(centroid, 2.0)
    return LineSample(ProcessParams(3.0, 0), window, 1.0, lines), (0.5, 0.0), apex


# ---------------------------------------------------------------------------
# Endpoint clusters
# ---------------------------------------------------------------------------

def clusters(
    rng: np.random.Generator,
    window: Disk,
    size: int,
    offset: float = 0.6,
    spread: float = 0.2,
) -> tuple[list[Point], list[Point]]:
    """Two clusters of ``size`` points, uniform in disks at (±offset·R, 0) of radius spread·R."""
    cx, cy = window.center
    R = window.radius
    out = []
    for sign in (-1.0, 1.0):
        rho = spread * R * np.sqrt(rng.random(size))
        ang = rng.uniform(0.0, 2.0 * math.pi, size)
        out.append([
            (float(cx + sign * offset * R + rho[k] * math.cos(ang[k])), float(cy + rho[k] * math.sin(ang[k])))
            for k in range(size)
        ])
    return out[0], out[1]
