"""
core/line_process.py - Sampling the speed-marked Poisson line process.

The improper process has intensity (γ−1) v^(−γ) dv × ½ dr dφ on
(speed × line space). Above any speed floor v₀ only finitely many lines
hit a bounded window, and that proper sub-process is what a LineSample
holds:

  - count      Poisson(πR · v₀^(−(γ−1))) for a disk window of radius R
  - lines      φ ~ Uniform[0, π), r = c·n(φ) + Uniform(−R, R)
  - speeds     Pareto tail P(V > v) = (v / v₀)^(−(γ−1))

Refinement lowers the floor by adding an independent band of slower lines
(the filtration by speed has independent increments), so a chain of
refinements is a monotone coupling of samples across floors. Every band
draws from its own stream keyed by (seed, band index).
"""

import logging
import math
import zlib
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from core.errors import GeometryError, ResourceCapError, UsageError
from core.geometry import Disk, Line, Point, uniform_lines

logger = logging.getLogger(__name__)

DEFAULT_MAX_LINES = 1_000_000
MEMBERSHIP_TOL = 1e-12


# ---------------------------------------------------------------------------
# Seeds
# ---------------------------------------------------------------------------

def _key(k) -> int:
    if isinstance(k, str):
        return zlib.crc32(k.encode("utf-8"))
    return int(k)


def seed_sequence(seed: int, *keys) -> np.random.SeedSequence:
    """Splittable stream: the child of ``seed`` addressed by ``keys``."""
    return np.random.SeedSequence(int(seed), spawn_key=tuple(_key(k) for k in keys))


def derive_seed(seed: int, *keys) -> int:
    """
    Derive a 64-bit seed for a sub-stream (replicate, band, ensemble ...).

    Derivation is deterministic and independent of call order, so replicate
    i gets the same seed whether or not replicates 0..i−1 ran.
    """
    hi, lo = seed_sequence(seed, *keys).generate_state(2, dtype=np.uint32)
    return (int(hi) << 32) | int(lo)


def stream(seed: int, *keys) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(seed, *keys))


# ---------------------------------------------------------------------------
# Speed law
# ---------------------------------------------------------------------------

def expected_count(gamma: float, radius: float, v_lo: float, v_hi: float = math.inf) -> float:
    """Mean number of lines with speed in [v_lo, v_hi) hitting a disk of radius R."""
    a = gamma - 1.0
    upper = 0.0 if math.isinf(v_hi) else v_hi ** (-a)
    return math.pi * radius * (v_lo ** (-a) - upper)


def floor_for_budget(gamma: float, radius: float, n_lines: float) -> float:
    """Speed floor at which a disk of radius R is hit by n_lines lines on average."""
    if n_lines <= 0:
        raise UsageError(f"line budget must be positive, got {n_lines}")
    return (math.pi * radius / n_lines) ** (1.0 / (gamma - 1.0))


def pareto_speeds(
    rng: np.random.Generator,
    n: int,
    v_lo: float,
    v_hi: float,
    gamma: float,
) -> np.ndarray:
    """
    Draw n speeds from the density ∝ v^(−γ) restricted to [v_lo, v_hi).

    Inversion of the survival function (v / v_lo)^(−(γ−1)); v_hi may be inf.
    """
    a = gamma - 1.0
    q = 0.0 if math.isinf(v_hi) else (v_hi / v_lo) ** (-a)
    u = rng.random(n)
    s = 1.0 - u * (1.0 - q)          # s ∈ (q, 1]
    v = v_lo * s ** (-1.0 / a)
    if not math.isinf(v_hi):
        v = np.minimum(v, np.nextafter(v_hi, 0.0))
    return v


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProcessParams:
    """
    Parameters of the line process: intensity exponent and root seed.

    Sampling works for any γ > 1; routing needs γ > 2 and checks it itself.
    """

    gamma: float
    seed: int = 0
    dimension: int = 2

    def __post_init__(self) -> None:
        if not self.gamma > 1:
            raise UsageError(f"the speed law needs gamma > 1, got {self.gamma}")
        if self.dimension != 2:
            raise UsageError(f"line sampling is planar only, got dimension {self.dimension}")
        if not 0 <= int(self.seed) < 2**64:
            raise UsageError(f"seed must be an unsigned 64-bit integer, got {self.seed}")


@dataclass(frozen=True)
class MarkedLine:
    """
    One line of the process with its speed limit.

    ``extent`` optionally restricts the line to an arclength interval; only
    deterministic fixtures whose members are segments of lines use it.
    """

    id: int
    line: Line
    v: float
    extent: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if not (self.v > 0 and math.isfinite(self.v)):
            raise GeometryError(f"line {self.id}: speed must be positive and finite, got {self.v}")
        if self.extent is not None and not self.extent[0] < self.extent[1]:
            raise GeometryError(f"line {self.id}: empty extent {self.extent}")

    @classmethod
    def segment(cls, id: int, a: Point, b: Point, v: float) -> "MarkedLine":
        """The segment [a, b] carried by the line through a and b."""
        line = Line.from_points(a, b)
        ta, tb = line.param(a), line.param(b)
        return cls(id, line, v, (min(ta, tb), max(ta, tb)))

    @property
    def phi(self) -> float:
        return self.line.phi

    @property
    def r(self) -> float:
        return self.line.r

    def support(self, clip: Disk) -> tuple[float, float] | None:
        """Arclength interval of the line inside the clip disk (and its extent)."""
        chord = self.line.chord(clip.center, clip.radius)
        if chord is None:
            return None
        if self.extent is None:
            return chord
        lo, hi = max(chord[0], self.extent[0]), min(chord[1], self.extent[1])
        return (lo, hi) if lo <= hi else None

    def distance(self, x) -> float:
        """Distance from x to the line, or to its extent when it has one."""
        if self.extent is None:
            return self.line.distance(x)
        t = min(max(self.line.param(x), self.extent[0]), self.extent[1])
        p = self.line.point_at(t)
        return math.hypot(x[0] - p[0], x[1] - p[1])


@dataclass(frozen=True)
class LineSample:
    """
    A realised proper sub-process: every line hitting ``window`` with speed
    at least ``v_floor``. Immutable; refinement and scaling return new
    samples. ``band`` counts the refinement bands drawn so far.
    """

    params: ProcessParams
    window: Disk
    v_floor: float
    lines: tuple[MarkedLine, ...] = field(default_factory=tuple)
    band: int = 0

    def __post_init__(self) -> None:
        if not self.v_floor > 0:
            raise UsageError(f"v_floor must be positive, got {self.v_floor}")
        ids = [ml.id for ml in self.lines]
        if len(set(ids)) != len(ids):
            raise GeometryError("line ids must be unique within a sample")
        if not self.lines:
            return
        _, phi, r, v = self.arrays
        cx, cy = self.window.center
        dist = np.abs(cx * np.cos(phi) + cy * np.sin(phi) - r)
        slack = MEMBERSHIP_TOL * max(1.0, self.window.radius)
        if np.any(dist > self.window.radius + slack):
            raise GeometryError("every line of a sample must hit its window")
        if np.any(v < self.v_floor * (1.0 - MEMBERSHIP_TOL)):
            raise GeometryError(f"every speed must be at least v_floor={self.v_floor}")

    @cached_property
    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Column view (ids, phi, r, v) for vectorised work."""
        ids = np.array([ml.id for ml in self.lines], dtype=np.int64)
        phi = np.array([ml.phi for ml in self.lines], dtype=float)
        r = np.array([ml.r for ml in self.lines], dtype=float)
        v = np.array([ml.v for ml in self.lines], dtype=float)
        return ids, phi, r, v

    @cached_property
    def by_id(self) -> dict[int, MarkedLine]:
        return {ml.id: ml for ml in self.lines}

    @property
    def gamma(self) -> float:
        return self.params.gamma

    @property
    def next_id(self) -> int:
        return max((ml.id for ml in self.lines), default=-1) + 1

    def fastest(self) -> MarkedLine | None:
        """The line with the largest speed (lowest id on ties)."""
        if not self.lines:
            return None
        return max(self.lines, key=lambda ml: (ml.v, -ml.id))

    def filter(self, v_min: float) -> "LineSample":
        """Sub-sample of lines with speed ≥ v_min (floor raised to v_min)."""
        kept = tuple(ml for ml in self.lines if ml.v >= v_min)
        return replace(self, v_floor=max(v_min, self.v_floor), lines=kept)

    def with_lines(self, lines) -> "LineSample":
        return replace(self, lines=tuple(lines))


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def _check_cap(mean: float, max_lines: int) -> None:
    if mean > max_lines:
        raise ResourceCapError(
            f"expected line count {mean:.4g} exceeds the cap of {max_lines}; "
            "raise v_floor or set SIRSN_MAX_LINES"
        )


def _draw_band(
    params: ProcessParams,
    window: Disk,
    band: int,
    v_lo: float,
    v_hi: float,
    first_id: int,
) -> tuple[MarkedLine, ...]:
    rng = stream(params.seed, "band", band)
    n = int(rng.poisson(expected_count(params.gamma, window.radius, v_lo, v_hi)))
    phi, r = uniform_lines(rng, n, window.center, window.radius)
    v = pareto_speeds(rng, n, v_lo, v_hi, params.gamma)
    return tuple(
        MarkedLine(first_id + i, Line.normal_form(float(phi[i]), float(r[i])), float(v[i]))
        for i in range(n)
    )


def sample(
    params: ProcessParams,
    window: Disk,
    v_floor: float,
    max_lines: int = DEFAULT_MAX_LINES,
) -> LineSample:
    """
    Realise the lines of speed ≥ v_floor hitting a disk window.

    Parameters
    ----------
    params:    γ and the root seed.
    window:    Disk window; other shapes are sampled through a circumscribed disk.
    v_floor:   Speed floor, > 0.
    max_lines: Cap on the expected count (not the realised one).

    Raises
    ------
    UsageError       if v_floor ≤ 0 or the window is not a disk.
    ResourceCapError if the expected count exceeds max_lines.
    """
    if not v_floor > 0:
        raise UsageError(f"v_floor must be positive, got {v_floor}")
    if not isinstance(window, Disk):
        raise UsageError(f"sampling windows are disks, got {type(window).__name__}")
    _check_cap(expected_count(params.gamma, window.radius, v_floor), max_lines)
    lines = _draw_band(params, window, 0, v_floor, math.inf, 0)
    logger.debug(
        "sampled %d lines (gamma=%.3g, R=%.3g, v_floor=%.4g, seed=%d)",
        len(lines), params.gamma, window.radius, v_floor, params.seed,
    )
    return LineSample(params, window, v_floor, lines, band=0)


def refine(
    sample: LineSample,
    new_v_floor: float,
    max_lines: int = DEFAULT_MAX_LINES,
) -> LineSample:
    """
    Lower the speed floor, keeping every existing line unchanged.

    The added lines have speeds in [new_v_floor, sample.v_floor) and come
    from the stream of the next band, so the chain of refinements is
    reproducible and each band is independent of the others.
    """
    if not 0 < new_v_floor < sample.v_floor:
        raise UsageError(
            f"refinement needs 0 < new floor < {sample.v_floor}, got {new_v_floor}"
        )
    params, window = sample.params, sample.window
    _check_cap(expected_count(params.gamma, window.radius, new_v_floor), max_lines)
    band = sample.band + 1
    added = _draw_band(params, window, band, new_v_floor, sample.v_floor, sample.next_id)
    logger.debug(
        "band %d: %d new lines in [%.4g, %.4g)", band, len(added), new_v_floor, sample.v_floor
    )
    return LineSample(params, window, new_v_floor, sample.lines + added, band=band)


def scale(sample: LineSample, s: float) -> LineSample:
    """
    Apply the scale map (φ, r, v) → (φ, s·r, s^(1/(γ−1))·v).

    The map leaves the intensity measure invariant, so the scaled sample has
    the law of a sample in the scaled window at the scaled floor.
    """
    if not s > 0:
        raise UsageError(f"scale factor must be positive, got {s}")
    factor = s ** (1.0 / (sample.gamma - 1.0))
    lines = tuple(
        MarkedLine(
            ml.id,
            Line(ml.phi, ml.r * s),
            ml.v * factor,
            None if ml.extent is None else (ml.extent[0] * s, ml.extent[1] * s),
        )
        for ml in sample.lines
    )
    cx, cy = sample.window.center
    window = Disk((cx * s, cy * s), sample.window.radius * s)
    return LineSample(sample.params, window, sample.v_floor * factor, lines, band=sample.band)


def speed_limit_at(sample: LineSample, x: Point, tol: float = 1e-9) -> float:
    """
    Maximum speed over lines passing within ``tol`` of x; 0 when none does
    (the field below the floor is unresolved).
    """
    best = 0.0
    for ml in sample.lines:
        if ml.v > best and ml.distance(x) <= tol:
            best = ml.v
    return best
