"""
core/serialize.py - JSON documents and CSV tables for every emitted result.

JSON floats are written with 17 significant digits, so a document read
back reproduces every value bit for bit. Non-finite statistics are written
as null. CSV cells use the shortest round-trip repr. All writers go
through checkpoint.write_text_atomic.
"""

import csv
import io
import json
import logging
import math
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from core.arrangement import ArrangementGraph
from core.checkpoint import write_text_atomic
from core.comparison import Trace
from core.errors import UsageError
from core.geodesics import ConvergenceReport, Route
from core.geometry import Disk, Line
from core.line_process import LineSample, MarkedLine, ProcessParams

logger = logging.getLogger(__name__)

SAMPLE_FORMAT = "sirsn-line-sample"
SAMPLE_VERSION = 1


def _clean(value):
    """Replace non-finite floats with None, recursively."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def _number(x: float) -> str:
    text = format(x, ".17g")
    return text if "." in text or "e" in text else text + ".0"


def _encode(value, level: int) -> str:
    if value is None or isinstance(value, bool):
        return json.dumps(value)
    if isinstance(value, np.generic):
        return _encode(value.item(), level)
    if isinstance(value, float):
        return _number(value) if math.isfinite(value) else "null"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    pad, close = "  " * (level + 1), "  " * level
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_encode(v, level + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        return "[\n" + ",\n".join(pad + _encode(v, level + 1) for v in value) + "\n" + close + "]"
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def dumps(obj: Any) -> str:
    """Indented JSON with every float written to 17 significant digits."""
    return _encode(_clean(obj), 0) + "\n"


def write_json(path: Path | str, obj: Any) -> Path:
    path = write_text_atomic(path, dumps(obj))
    logger.debug("wrote %s", path)
    return path


# ---------------------------------------------------------------------------
# LineSample
# ---------------------------------------------------------------------------

def sample_to_dict(smp: LineSample) -> dict:
    lines = []
    for ml in smp.lines:
        row = {"id": ml.id, "phi": ml.phi, "r": ml.r, "v": ml.v}
        if ml.extent is not None:
            row["extent"] = list(ml.extent)
        lines.append(row)
    return {
        "format": SAMPLE_FORMAT,
        "version": SAMPLE_VERSION,
        "gamma": smp.gamma,
        "seed": int(smp.params.seed),
        "window": {"cx": smp.window.center[0], "cy": smp.window.center[1], "R": smp.window.radius},
        "v_floor": smp.v_floor,
        "band": smp.band,
        "lines": lines,
    }


def sample_from_dict(doc: dict) -> LineSample:
    """Inverse of sample_to_dict. Raises UsageError for another format or version."""
    if doc.get("format") != SAMPLE_FORMAT or doc.get("version") != SAMPLE_VERSION:
        raise UsageError(
            f"not a version-{SAMPLE_VERSION} line sample document "
            f"(format={doc.get('format')!r}, version={doc.get('version')!r})"
        )
    w = doc["window"]
    lines = tuple(
        MarkedLine(
            int(row["id"]),
            Line(float(row["phi"]), float(row["r"])),
            float(row["v"]),
            tuple(row["extent"]) if row.get("extent") is not None else None,
        )
        for row in doc["lines"]
    )
    return LineSample(
        ProcessParams(float(doc["gamma"]), int(doc["seed"])),
        Disk((float(w["cx"]), float(w["cy"])), float(w["R"])),
        float(doc["v_floor"]),
        lines,
        int(doc.get("band", 0)),
    )


def load_sample(path: Path | str) -> LineSample:
    with Path(path).open("r", encoding="utf-8") as fh:
        return sample_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Graph, route, convergence
# ---------------------------------------------------------------------------

def graph_to_dict(graph: ArrangementGraph) -> dict:
    return graph.to_dict()


def route_to_dict(route: Route) -> dict:
    doc = {
        "from": list(route.start),
        "to": list(route.end),
        "total_time": route.total_time,
        "total_length": route.total_length,
        "walk_time": route.walk_time,
        "tie": route.tie,
        "segments": [
            {
                "kind": seg.kind,
                "line": seg.line,
                "from": list(seg.start),
                "to": list(seg.end),
                "speed": seg.speed,
                "length": seg.length,
                "time": seg.time,
            }
            for seg in route.segments
        ],
    }
    if route.vertex_path:
        doc["vertex_path"] = list(route.vertex_path)
    if route.tie_route is not None:
        doc["tie_time"] = route.tie_route.total_time
        doc["tie_vertex_path"] = list(route.tie_route.vertex_path)
    if route.tree_nodes:
        doc["fallbacks"] = route.fallbacks
        doc["tree_nodes"] = [
            {"level": n.level, "separation": n.separation, "line": n.line, "speed": n.speed}
            for n in route.tree_nodes
        ]
    return doc


CONVERGENCE_COLUMNS = ("level", "v_floor", "epsilon", "k_nearest", "time", "length", "walk_time")


def convergence_to_dict(report: ConvergenceReport) -> dict:
    return {
        "levels": [
            {
                "level": row.level, "v_floor": row.v_floor, "epsilon": row.epsilon,
                "k_nearest": row.k_nearest, "time": row.time, "length": row.length,
                "walk_time": row.walk_time, "n_lines": row.n_lines,
                "n_vertices": row.n_vertices, "tie": row.tie,
            }
            for row in report.levels
        ],
        "stabilized": report.stabilized,
        "truncated": report.truncated,
        "monotone": report.monotone,
        "final_time": report.final_time,
    }


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def csv_text(header: Iterable[str], rows: Iterable[Iterable]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        writer.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def write_csv(path: Path | str, header: Iterable[str], rows: Iterable[Iterable]) -> Path:
    return write_text_atomic(path, csv_text(header, rows))


def convergence_rows(report: ConvergenceReport) -> list[tuple]:
    return [
        (row.level, row.v_floor, row.epsilon, row.k_nearest, row.time, row.length, row.walk_time)
        for row in report.levels
    ]


TRACE_COLUMNS = ("n", "P", "S", "X", "partial_sum")


def trace_rows(trace: Trace) -> list[tuple]:
    P, S = trace.P, trace.S
    return [
        (int(trace.n[k]), float(P[k]), float(S[k]), float(trace.X[k]), float(trace.partial_sum[k]))
        for k in range(len(trace.n))
    ]


def table_rows(table: list[dict]) -> tuple[list[str], list[tuple]]:
    """Header and rows for a list of flat dicts (columns in first-seen order)."""
    header: list[str] = []
    for row in table:
        header += [k for k in row if k not in header]
    return header, [tuple(row.get(k, "") for k in header) for row in table]
