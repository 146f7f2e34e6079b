"""
Shared pytest fixtures for the line network test suite.
"""

import pytest

from core.geometry import Disk, Line
from core.line_process import LineSample, MarkedLine, ProcessParams, sample


# ---------------------------------------------------------------------------
# Hand-built line samples
# ---------------------------------------------------------------------------

def make_line(id: int, phi: float, r: float, v: float = 1.0) -> MarkedLine:
    """A full line in normal form with speed v."""
    return MarkedLine(id, Line(phi, r), v)


def make_sample(
    lines: list[MarkedLine],
    radius: float = 1.0,
    v_floor: float | None = None,
    gamma: float = 3.0,
    seed: int = 0,
    center=(0.0, 0.0),
) -> LineSample:
    """A LineSample around the given lines; the floor defaults to the slowest speed."""
    if v_floor is None:
        v_floor = min((ml.v for ml in lines), default=1.0)
    return LineSample(ProcessParams(gamma, seed), Disk(center, radius), v_floor, tuple(lines))


@pytest.fixture
def cross_sample():
    """
    Horizontal (y = 0, speed 4) and vertical (x = 0, speed 2) lines through
    the origin, in the unit disk.
    """
    return make_sample([make_line(0, 1.5707963267948966, 0.0, 4.0), make_line(1, 0.0, 0.0, 2.0)])


@pytest.fixture
def grid_sample():
    """
    Two horizontal lines y = ±0.25 (speeds 3 and 1) and two vertical lines
    x = ±0.25 (speeds 2 and 1) in a disk of radius 1.
    """
    return make_sample([
        make_line(0, 1.5707963267948966, 0.25, 3.0),
        make_line(1, 1.5707963267948966, -0.25, 1.0),
        make_line(2, 0.0, 0.25, 2.0),
        make_line(3, 0.0, -0.25, 1.0),
    ])


@pytest.fixture
def random_sample():
    """A seeded γ = 3 sample with roughly thirty lines in the unit disk."""
    return sample(ProcessParams(3.0, 1729), Disk((0.0, 0.0), 1.0), 0.33)
