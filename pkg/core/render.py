"""
core/render.py - SVG figures of samples, arrangements and routes.

The viewBox is the window's bounding square with y pointing up (points are
drawn at (x, −y)). Line strokes get darker with log(v / v_floor), clamped at
the fastest speed drawn, so slow lines come out light. WALK pieces are
dashed.
"""

import logging
import math
import xml.etree.ElementTree as ET
from pathlib import Path

from core.checkpoint import write_text_atomic
from core.geodesics import WALK, Route
from core.geometry import Disk, Point
from core.line_process import LineSample

logger = logging.getLogger(__name__)

SVG_NS = "http://www.w3.org/2000/svg"
LIGHTEST = 215
ROUTE_COLOUR = "#c0392b"
POINT_COLOUR = "#1f5fa8"


def _num(x: float) -> str:
    return f"{x:.10g}"


def speed_shade(v: float, v_floor: float, v_top: float) -> str:
    """Grey for speed v: light at v_floor, black at v_top and above."""
    if v_top <= v_floor:
        darkness = 1.0
    else:
        darkness = math.log(max(v, v_floor) / v_floor) / math.log(v_top / v_floor)
        darkness = min(1.0, max(0.0, darkness))
    level = round(LIGHTEST * (1.0 - darkness))
    return f"#{level:02x}{level:02x}{level:02x}"


def svg_root(window: Disk, size_px: int = 800) -> ET.Element:
    cx, cy = window.center
    R = window.radius
    root = ET.Element(
        "svg",
        xmlns=SVG_NS,
        version="1.1",
        width=f"{size_px}px",
        height=f"{size_px}px",
        viewBox=" ".join(_num(x) for x in (cx - R, -cy - R, 2 * R, 2 * R)),
    )
    ET.SubElement(
        root, "circle",
        cx=_num(cx), cy=_num(-cy), r=_num(R),
        fill="white", stroke="#999999", **{"stroke-width": _num(0.002 * R)},
    )
    return root


def _segment(parent: ET.Element, a: Point, b: Point, stroke: str, width: float, **extra) -> ET.Element:
    return ET.SubElement(
        parent, "line",
        x1=_num(a[0]), y1=_num(-a[1]), x2=_num(b[0]), y2=_num(-b[1]),
        stroke=stroke, **{"stroke-width": _num(width)}, **extra,
    )


def draw_lines(parent: ET.Element, sample: LineSample, v_top: float | None = None) -> int:
    """Draw every line's support inside the window; returns how many were drawn."""
    R = sample.window.radius
    group = ET.SubElement(parent, "g", id="lines", fill="none")
    v_top = v_top or max((ml.v for ml in sample.lines), default=sample.v_floor)
    drawn = 0
    # Slow lines first so fast ones stay on top.
    for ml in sorted(sample.lines, key=lambda m: (m.v, m.id)):
        sup = ml.support(sample.window)
        if sup is None:
            continue
        a, b = ml.line.point_at(sup[0]), ml.line.point_at(sup[1])
        el = _segment(group, a, b, speed_shade(ml.v, sample.v_floor, v_top), 0.003 * R)
        el.set("data-line", str(ml.id))
        drawn += 1
    return drawn


def draw_route(parent: ET.Element, route: Route, width: float, colour: str = ROUTE_COLOUR) -> None:
    group = ET.SubElement(parent, "g", fill="none")
    for seg in route.segments:
        if seg.kind == WALK:
            _segment(group, seg.start, seg.end, colour, width, **{"stroke-dasharray": f"{_num(3 * width)} {_num(2 * width)}"})
        else:
            _segment(group, seg.start, seg.end, colour, width)


def draw_points(parent: ET.Element, points, radius: float) -> None:
    group = ET.SubElement(parent, "g", id="points", fill=POINT_COLOUR)
    for p in points:
        ET.SubElement(group, "circle", cx=_num(p[0]), cy=_num(-p[1]), r=_num(radius))


def to_text(root: ET.Element) -> str:
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def render_sample(sample: LineSample) -> str:
    root = svg_root(sample.window)
    n = draw_lines(root, sample)
    logger.debug("drew %d lines", n)
    return to_text(root)


def render_route(sample: LineSample, route: Route) -> str:
    """The arrangement with one route drawn over it."""
    root = svg_root(sample.window)
    draw_lines(root, sample)
    R = sample.window.radius
    draw_route(root, route, 0.008 * R)
    draw_points(root, [route.start, route.end], 0.012 * R)
    return to_text(root)


def render_network(sample: LineSample, routes: list[Route], points) -> str:
    """
    The union of routes among a point set, each route piece shaded by its
    speed like the lines, over a faint copy of the arrangement.
    """
    root = svg_root(sample.window)
    R = sample.window.radius
    faint = ET.SubElement(root, "g", opacity="0.25")
    draw_lines(faint, sample)
    v_top = max((ml.v for ml in sample.lines), default=sample.v_floor)
    group = ET.SubElement(root, "g", id="routes", fill="none")
    seen = set()
    for route in routes:
        for seg in route.segments:
            key = (seg.kind, seg.line, seg.start, seg.end)
            if key in seen:
                continue
            seen.add(key)
            colour = speed_shade(seg.speed, sample.v_floor, v_top)
            if seg.kind == WALK:
                _segment(group, seg.start, seg.end, colour, 0.004 * R, **{"stroke-dasharray": _num(0.01 * R)})
            else:
                _segment(group, seg.start, seg.end, colour, 0.006 * R)
    draw_points(root, points, 0.01 * R)
    return to_text(root)


def write_svg(path: Path | str, text: str) -> Path:
    return write_text_atomic(path, text)
