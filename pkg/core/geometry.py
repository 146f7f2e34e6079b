"""
core/geometry.py - Planar lines, convex bodies and invariant line measures.

Lines are kept in Hesse normal form: the line {x : x·(cos φ, sin φ) = r}
with 0 ≤ φ < π and signed offset r. Its direction is (−sin φ, cos φ) and
points on it are addressed by the arclength parameter t = x·direction.

The invariant measure on line space is ½ dr dφ. With that normalisation
the lines hitting a convex body K have mass ½·perimeter(K), so the disk of
radius R is hit with mass πR and a segment of length L with mass L.

All functions here are pure.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.spatial import ConvexHull

from core.errors import GeometryError, UsageError

logger = logging.getLogger(__name__)

ANGLE_TOL = 1e-12
QUAD_ABS_TOL = 1e-9

Point = tuple[float, float]


# ---------------------------------------------------------------------------
# Lines
# ---------------------------------------------------------------------------

def normal_form(phi: float, r: float) -> tuple[float, float]:
    """
    Reduce an arbitrary (φ, r) pair to the canonical representation.

    φ is taken mod π (flipping the sign of r when a half-turn is removed);
    angles within ANGLE_TOL of π are identified with 0.
    """
    if not (math.isfinite(phi) and math.isfinite(r)):
        raise GeometryError(f"line parameters must be finite, got phi={phi}, r={r}")
    phi = math.fmod(phi, 2.0 * math.pi)
    if phi < 0.0:
        phi += 2.0 * math.pi
    if phi >= math.pi:
        phi -= math.pi
        r = -r
    if math.pi - phi < ANGLE_TOL:
        phi = 0.0
        r = -r
    return phi, r


@dataclass(frozen=True)
class Line:
    """An unoriented planar line in Hesse normal form."""

    phi: float
    r: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.phi < math.pi):
            raise GeometryError(f"phi must lie in [0, pi), got {self.phi}")
        if not math.isfinite(self.r):
            raise GeometryError(f"r must be finite, got {self.r}")

    @classmethod
    def normal_form(cls, phi: float, r: float) -> "Line":
        return cls(*normal_form(phi, r))

    @classmethod
    def from_points(cls, a: Point, b: Point) -> "Line":
        """The line through two distinct points."""
        dx, dy = b[0] - a[0], b[1] - a[1]
        if dx == 0.0 and dy == 0.0:
            raise GeometryError(f"a line needs two distinct points, got {a} twice")
        # direction (−sin φ, cos φ) = (dx, dy)/|d|
        phi = math.atan2(-dx, dy)
        r = a[0] * math.cos(phi) + a[1] * math.sin(phi)
        return cls.normal_form(phi, r)

    @property
    def normal(self) -> np.ndarray:
        return np.array([math.cos(self.phi), math.sin(self.phi)])

    @property
    def direction(self) -> np.ndarray:
        return np.array([-math.sin(self.phi), math.cos(self.phi)])

    def signed_distance(self, x) -> float:
        return float(x[0] * math.cos(self.phi) + x[1] * math.sin(self.phi) - self.r)

    def distance(self, x) -> float:
        """Perpendicular distance |x·n − r|."""
        return abs(self.signed_distance(x))

    def param(self, x) -> float:
        """Arclength parameter of the orthogonal projection of x."""
        return float(-x[0] * math.sin(self.phi) + x[1] * math.cos(self.phi))

    def point_at(self, t: float) -> np.ndarray:
        return self.r * self.normal + t * self.direction

    def foot(self, x) -> np.ndarray:
        """Perpendicular foot of x on the line."""
        return self.point_at(self.param(x))

    def chord(self, center: Point, radius: float) -> tuple[float, float] | None:
        """
        Arclength interval of the line inside the closed disk, or None.
        """
        h = self.signed_distance(center)
        if abs(h) > radius:
            return None
        half = math.sqrt(max(0.0, radius * radius - h * h))
        tc = self.param(center)
        return tc - half, tc + half

    def intersect(self, other: "Line") -> np.ndarray | None:
        """Intersection point, or None for parallel lines."""
        det = math.sin(other.phi - self.phi)
        if abs(det) < ANGLE_TOL:
            return None
        x = (self.r * math.sin(other.phi) - other.r * math.sin(self.phi)) / det
        y = (other.r * math.cos(self.phi) - self.r * math.cos(other.phi)) / det
        return np.array([x, y])


def uniform_lines(
    rng: np.random.Generator,
    n: int,
    center: Point,
    radius: float,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Draw n lines from the invariant measure conditioned to hit a disk.

    Given φ the offsets of hitting lines form the interval c·n(φ) ± R, and
    the measure is uniform in (r, φ), so inversion is exact.

    Returns
    -------
    (phi, r) arrays of length n.
    """
    phi = rng.uniform(0.0, math.pi, size=n)
    offset = rng.uniform(-radius, radius, size=n)
    r = center[0] * np.cos(phi) + center[1] * np.sin(phi) + offset
    return phi, r


# ---------------------------------------------------------------------------
# Convex bodies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Disk:
    center: Point
    radius: float

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise GeometryError(f"disk radius must be positive, got {self.radius}")

    def contains(self, x, rel_tol: float = 1e-12) -> bool:
        dx, dy = x[0] - self.center[0], x[1] - self.center[1]
        return math.hypot(dx, dy) <= self.radius * (1.0 + rel_tol)

    def contains_disk(self, other: "Disk", rel_tol: float = 1e-12) -> bool:
        d = math.dist(self.center, other.center)
        return d + other.radius <= self.radius * (1.0 + rel_tol)


@dataclass(frozen=True)
class Segment:
    a: Point
    b: Point

    def __post_init__(self) -> None:
        if tuple(self.a) == tuple(self.b):
            raise GeometryError(f"segment endpoints must differ, got {self.a} twice")

    @property
    def length(self) -> float:
        return math.dist(self.a, self.b)


@dataclass(frozen=True)
class Polygon:
    """A convex polygon with counter-clockwise vertices."""

    vertices: tuple[Point, ...]

    def __post_init__(self) -> None:
        pts = np.asarray(self.vertices, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
            raise GeometryError("a polygon needs at least two 2-D vertices")
        scale = float(np.abs(pts).max()) or 1.0
        tol = 1e-12 * scale * scale
        nxt = np.roll(pts, -1, axis=0)
        area2 = float(np.sum(pts[:, 0] * nxt[:, 1] - nxt[:, 0] * pts[:, 1]))
        if area2 < -tol:
            raise GeometryError("polygon vertices must be counter-clockwise")
        e1 = nxt - pts
        e2 = np.roll(nxt, -1, axis=0) - nxt
        cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        if np.any(cross < -tol):
            raise GeometryError("polygon is not convex")

    @property
    def perimeter(self) -> float:
        pts = np.asarray(self.vertices, dtype=float)
        return float(np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1).sum())


ConvexBody = Disk | Polygon | Segment


def perimeter(body: ConvexBody) -> float:
    """Boundary length; a segment counts both sides (2L)."""
    if isinstance(body, Disk):
        return 2.0 * math.pi * body.radius
    if isinstance(body, Segment):
        return 2.0 * body.length
    if isinstance(body, Polygon):
        return body.perimeter
    raise GeometryError(f"unsupported body {type(body).__name__}")


def hitting_measure(body: ConvexBody) -> float:
    """
    Invariant measure of the lines hitting a convex body: ½·perimeter.

    A degenerate polygon (all vertices collinear) has perimeter twice its
    length and therefore follows the segment rule automatically.
    """
    return 0.5 * perimeter(body)


def random_convex_polygon(rng: np.random.Generator, n: int, radius: float = 1.0) -> Polygon:
    """Convex hull of n uniform points in the disk of the given radius about the origin."""
    if n < 3:
        raise UsageError(f"a random polygon needs at least 3 points, got {n}")
    rho = radius * np.sqrt(rng.random(n))
    ang = rng.uniform(0.0, 2.0 * math.pi, n)
    pts = np.column_stack([rho * np.cos(ang), rho * np.sin(ang)])
    hull = ConvexHull(pts)
    # 2-D hull vertices come back counter-clockwise.
    return Polygon(tuple((float(pts[k, 0]), float(pts[k, 1])) for k in hull.vertices))


def projection(body: ConvexBody, phi) -> tuple[np.ndarray, np.ndarray]:
    """
    Support interval [lo, hi] of the body on the normal direction n(φ).

    A line (φ, r) hits the body iff lo(φ) ≤ r ≤ hi(φ). Vectorised over φ.
    """
    phi = np.asarray(phi, dtype=float)
    cos, sin = np.cos(phi), np.sin(phi)
    if isinstance(body, Disk):
        mid = body.center[0] * cos + body.center[1] * sin
        return mid - body.radius, mid + body.radius
    if isinstance(body, Segment):
        pts = np.array([body.a, body.b], dtype=float)
    elif isinstance(body, Polygon):
        pts = np.asarray(body.vertices, dtype=float)
    else:
        raise GeometryError(f"unsupported body {type(body).__name__}")
    proj = np.multiply.outer(pts[:, 0], cos) + np.multiply.outer(pts[:, 1], sin)
    return proj.min(axis=0), proj.max(axis=0)


# ---------------------------------------------------------------------------
# Two-body line measures
# ---------------------------------------------------------------------------

def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a, b, p) -> bool:
    return (min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= p[1] <= max(a[1], b[1]))


def segments_intersect(s1: Segment, s2: Segment) -> bool:
    """True when the closed segments share at least one point."""
    p1, p2, p3, p4 = s1.a, s1.b, s2.a, s2.b
    d1 = _orient(p3, p4, p1)
    d2 = _orient(p3, p4, p2)
    d3 = _orient(p1, p2, p3)
    d4 = _orient(p1, p2, p4)
    if d1 * d2 < 0 and d3 * d4 < 0:
        return True
    if d1 == 0 and _on_segment(p3, p4, p1):
        return True
    if d2 == 0 and _on_segment(p3, p4, p2):
        return True
    if d3 == 0 and _on_segment(p1, p2, p3):
        return True
    if d4 == 0 and _on_segment(p1, p2, p4):
        return True
    return False


def measure_lines_meeting_two_segments(s1: Segment, s2: Segment) -> float:
    """
    Invariant measure of the lines hitting both of two disjoint segments.

    Computes ½∫₀^π |I₁(φ) ∩ I₂(φ)| dφ exactly. Between consecutive angles at
    which two endpoint projections coincide the order of the four
    projections is fixed, so the overlap is either empty or (p − q)·n(φ)
    for a fixed endpoint pair, whose antiderivative is closed-form. For
    endpoints in convex position this equals half the crossed diagonals
    minus the uncrossed sides.

    Raises
    ------
    GeometryError if the segments meet.
    """
    if segments_intersect(s1, s2):
        raise GeometryError(f"segments {s1} and {s2} intersect")
    pts = np.array([s1.a, s1.b, s2.a, s2.b], dtype=float)

    cuts = {0.0, math.pi}
    for i in range(4):
        for j in range(i + 1, 4):
            dx, dy = pts[i] - pts[j]
            if dx == 0.0 and dy == 0.0:
                continue
            cuts.add(math.fmod(math.atan2(dy, dx) + 1.5 * math.pi, math.pi))
    cuts = sorted(c for c in cuts if 0.0 <= c <= math.pi)

    total = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        if hi <= lo:
            continue
        mid = 0.5 * (lo + hi)
        p = pts @ np.array([math.cos(mid), math.sin(mid)])
        hi1 = 0 if p[0] >= p[1] else 1
        hi2 = 2 if p[2] >= p[3] else 3
        lo1, lo2 = 1 - hi1, 5 - hi2
        upper = hi1 if p[hi1] <= p[hi2] else hi2
        lower = lo1 if p[lo1] >= p[lo2] else lo2
        if p[upper] - p[lower] <= 0.0:
            continue
        dx, dy = pts[upper] - pts[lower]
        total += dx * (math.sin(hi) - math.sin(lo)) - dy * (math.cos(hi) - math.cos(lo))
    return 0.5 * total


def measure_lines_meeting_two_disks(c1: Point, c2: Point, rho: float) -> float:
    """
    Invariant measure of the lines hitting both of two equal disjoint disks.

    The offset intervals at angle φ overlap in max(0, 2ρ − |Δ·n(φ)|); the
    integral over φ is evaluated by adaptive quadrature with the kinks
    passed as breakpoints.

    Raises
    ------
    GeometryError if the disks overlap or ρ is negative.
    """
    if rho < 0:
        raise GeometryError(f"radius must be nonnegative, got {rho}")
    dx, dy = c2[0] - c1[0], c2[1] - c1[1]
    dist = math.hypot(dx, dy)
    if dist <= 2.0 * rho:
        raise GeometryError(
            f"disks of radius {rho} at distance {dist} overlap; need |c1−c2| > 2ρ"
        )
    if rho == 0.0:
        return 0.0
    psi = math.atan2(dy, dx)
    u0 = math.acos(2.0 * rho / dist)
    points = sorted(
        math.fmod(a + 4.0 * math.pi, math.pi)
        for a in (psi + u0, psi - u0, psi + 0.5 * math.pi)
    )

    def overlap(phi: float) -> float:
        return max(0.0, 2.0 * rho - abs(dist * math.cos(phi - psi)))

    value, _ = integrate.quad(
        overlap, 0.0, math.pi, points=points, epsabs=QUAD_ABS_TOL, limit=200
    )
    return 0.5 * value


# ---------------------------------------------------------------------------
# Cost index
# ---------------------------------------------------------------------------

def cost_index(v: float, theta: float, w: float) -> float:
    """
    Relative cost index csc θ / v − cot θ / w of a line of speed v meeting a
    reference line of speed w at angle θ.
    """
    if not (v > 0 and w > 0):
        raise GeometryError(f"speeds must be positive, got v={v}, w={w}")
    if not (0.0 < theta < math.pi):
        raise GeometryError(
            f"cost index is undefined at theta={theta}; the reference line itself "
            "has limiting cost 0"
        )
    s = math.sin(theta)
    return 1.0 / (v * s) - math.cos(theta) / (w * s)


def cost_intensity_density(c, theta, w: float, gamma: float):
    """
    Intensity of the marked process in (cost, offset, angle) coordinates.

    Returns (γ−1)/2 · sin θ · (c sin θ + cos θ / w)^(γ−2), and 0 where the
    bracket (which equals 1/v) is not positive. Vectorised over c and θ.
    """
    if not gamma > 2:
        raise UsageError(f"cost intensity needs gamma > 2, got {gamma}")
    if not w > 0:
        raise GeometryError(f"reference speed must be positive, got {w}")
    c_arr, th = np.broadcast_arrays(np.asarray(c, dtype=float), np.asarray(theta, dtype=float))
    u = c_arr * np.sin(th) + np.cos(th) / w
    out = np.zeros(u.shape, dtype=float)
    inside = u > 0
    out[inside] = 0.5 * (gamma - 1.0) * np.sin(th[inside]) * u[inside] ** (gamma - 2.0)
    return out if out.ndim else float(out)
