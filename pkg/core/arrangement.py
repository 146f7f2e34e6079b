"""
core/arrangement.py - The intersection skeleton of a line sample.

``build`` turns a LineSample into an undirected weighted graph:

  vertices   pairwise intersections inside the clip disk ("x{i}-{j}") and
             the two ends of every line's support ("b{i}-0", "b{i}-1");
             candidates closer than merge_tol·R collapse onto the first one
  edges      consecutive vertices along each line ("{line}|{u}|{v}"),
             speed = the line's speed, time = length / speed

``inject_terminal`` adds an arbitrary endpoint ("t{k}") with WALK edges at
speed ε to perpendicular feet ("f{k}-{line}") on its nearest lines, plus a
direct WALK edge to every earlier terminal. It works on a copy; a built
graph is never mutated after construction.
"""

import bisect
import logging
import math
from dataclasses import dataclass, replace

import networkx as nx
import numpy as np
from scipy.spatial import cKDTree

from core.errors import GeometryError, ResourceCapError, UsageError
from core.geometry import ANGLE_TOL, Disk, Point
from core.line_process import LineSample, MarkedLine

logger = logging.getLogger(__name__)

DEFAULT_MAX_INTERSECTIONS = 50_000_000
DEFAULT_K_NEAREST = 64
MERGE_TOL = 1e-9
# Pairs evaluated per vectorised block.
BLOCK_PAIRS = 4_000_000


# ---------------------------------------------------------------------------
# Graph elements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Vertex:
    id: str
    x: float
    y: float
    lines: tuple[int, ...] = ()

    @property
    def point(self) -> Point:
        return (self.x, self.y)


@dataclass(frozen=True)
class Edge:
    """A LINE edge (``line`` is the line id) or a WALK edge (``line`` is None)."""

    id: str
    u: str
    v: str
    line: int | None
    length: float
    speed: float
    time: float

    @classmethod
    def make(cls, id: str, u: str, v: str, line: int | None, length: float, speed: float) -> "Edge":
        return cls(id, u, v, line, length, speed, length / speed)

    @property
    def is_walk(self) -> bool:
        return self.line is None

    def other(self, vid: str) -> str:
        return self.v if vid == self.u else self.u


@dataclass(frozen=True)
class Terminal:
    point: Point
    vertex: str
    access: tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# ArrangementGraph
# ---------------------------------------------------------------------------

class ArrangementGraph:
    """
    Vertices, edges and per-line station lists of an arrangement.

    Attributes
    ----------
    window:     Window of the sample the graph was built from.
    clip:       Disk the skeleton is restricted to.
    epsilon:    WALK speed, fixed by the first terminal injection.
    lines:      {line id: MarkedLine} for lines with a support inside the clip.
    supports:   {line id: (t0, t1)} arclength support inside the clip.
    stations:   {line id: [(t, vertex id), ...]} sorted along each line.
    tol:        Absolute merge distance (merge_tol · clip radius).
    merge_events: Number of candidate vertices merged into another one.
    """

    def __init__(self, window: Disk, clip: Disk, lines: dict[int, MarkedLine], tol: float) -> None:
        self.window = window
        self.clip = clip
        self.lines = lines
        self.tol = tol
        self.epsilon: float | None = None
        self.vertices: dict[str, Vertex] = {}
        self.edges: dict[str, Edge] = {}
        self.adjacency: dict[str, dict[str, str]] = {}
        self.stations: dict[int, list[tuple[float, str]]] = {}
        self.supports: dict[int, tuple[float, float]] = {}
        self.terminals: list[Terminal] = []
        self.merge_events = 0
        self._owned_adj: set[str] | None = None
        self._owned_stations: set[int] | None = None

    # ------------------------------------------------------------------
    # Copy-on-write plumbing
    # ------------------------------------------------------------------

    def copy(self) -> "ArrangementGraph":
        """Cheap copy; inner adjacency maps and station lists are copied on write."""
        g = ArrangementGraph(self.window, self.clip, self.lines, self.tol)
        g.epsilon = self.epsilon
        g.vertices = dict(self.vertices)
        g.edges = dict(self.edges)
        g.adjacency = dict(self.adjacency)
        g.stations = dict(self.stations)
        g.supports = self.supports
        g.terminals = list(self.terminals)
        g.merge_events = self.merge_events
        g._owned_adj = set()
        g._owned_stations = set()
        return g

    def _adj(self, vid: str) -> dict[str, str]:
        if self._owned_adj is not None and vid not in self._owned_adj:
            self.adjacency[vid] = dict(self.adjacency.get(vid, {}))
            self._owned_adj.add(vid)
        return self.adjacency.setdefault(vid, {})

    def _stations(self, line_id: int) -> list[tuple[float, str]]:
        if self._owned_stations is not None and line_id not in self._owned_stations:
            self.stations[line_id] = list(self.stations[line_id])
            self._owned_stations.add(line_id)
        return self.stations[line_id]

    # ------------------------------------------------------------------
    # Mutation (construction and injection only)
    # ------------------------------------------------------------------

    def _add_vertex(self, vertex: Vertex) -> None:
        self.vertices[vertex.id] = vertex
        self._adj(vertex.id)

    def _add_edge(self, edge: Edge) -> bool:
        """Insert an edge; between two vertices only the fastest edge is kept."""
        existing = self.adjacency.get(edge.u, {}).get(edge.v)
        if existing is not None:
            if self.edges[existing].time <= edge.time:
                return False
            self._remove_edge(existing)
        self.edges[edge.id] = edge
        self._adj(edge.u)[edge.v] = edge.id
        self._adj(edge.v)[edge.u] = edge.id
        return True

    def _remove_edge(self, edge_id: str) -> None:
        edge = self.edges.pop(edge_id, None)
        if edge is None:
            return
        if self.adjacency.get(edge.u, {}).get(edge.v) == edge_id:
            del self._adj(edge.u)[edge.v]
        if self.adjacency.get(edge.v, {}).get(edge.u) == edge_id:
            del self._adj(edge.v)[edge.u]

    def _split(self, line_id: int, t: float, vid: str) -> list[str]:
        """Insert vertex ``vid`` at parameter t on a line, splitting one edge."""
        ml = self.lines[line_id]
        st = self._stations(line_id)
        k = bisect.bisect_left(st, t, key=lambda s: s[0])
        if not 0 < k < len(st):
            raise GeometryError(f"parameter {t} lies outside the support of line {line_id}")
        (ta, a), (tb, b) = st[k - 1], st[k]
        self._remove_edge(f"{line_id}|{a}|{b}")
        st.insert(k, (t, vid))
        vertex = self.vertices[vid]
        if line_id not in vertex.lines:
            self.vertices[vid] = replace(vertex, lines=tuple(sorted(vertex.lines + (line_id,))))
        added = []
        for (p, q, length) in ((a, vid, t - ta), (vid, b, tb - t)):
            if length > 0.0:
                edge = Edge.make(f"{line_id}|{p}|{q}", p, q, line_id, length, ml.v)
                if self._add_edge(edge):
                    added.append(edge.id)
        return added

    # ------------------------------------------------------------------
    # Queries and export
    # ------------------------------------------------------------------

    def neighbours(self, vid: str):
        """Yield (neighbour id, edge) pairs."""
        edges = self.edges
        for w, eid in self.adjacency.get(vid, {}).items():
            yield w, edges[eid]

    def line_length(self) -> float:
        """Total length of LINE edges."""
        return sum(e.length for e in self.edges.values() if not e.is_walk)

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        for v in self.vertices.values():
            g.add_node(v.id, pos=v.point)
        for e in self.edges.values():
            g.add_edge(e.u, e.v, id=e.id, weight=e.time, length=e.length, line=e.line)
        return g

    def to_dict(self) -> dict:
        return {
            "vertices": [{"id": v.id, "x": v.x, "y": v.y} for v in self.vertices.values()],
            "edges": [
                {
                    "id": e.id, "u": e.u, "v": e.v,
                    "line": "WALK" if e.is_walk else e.line,
                    "length": e.length, "speed": e.speed, "time": e.time,
                }
                for e in self.edges.values()
            ],
        }

    def __repr__(self) -> str:
        return (
            f"ArrangementGraph(lines={len(self.lines)}, vertices={len(self.vertices)}, "
            f"edges={len(self.edges)}, terminals={len(self.terminals)})"
        )


# ---------------------------------------------------------------------------
# build
# ---------------------------------------------------------------------------

def _pairwise_intersections(
    ids: np.ndarray,
    phi: np.ndarray,
    r: np.ndarray,
    t0: np.ndarray,
    t1: np.ndarray,
    tol: float,
    max_intersections: int,
):
    """
    All pairwise intersections that fall inside both supports.

    Rows are processed in blocks; every block is a pure function of the
    input arrays and results are concatenated in (i, j) order.
    """
    n = len(ids)
    cos, sin = np.cos(phi), np.sin(phi)
    found = []
    total = 0
    rows = max(1, BLOCK_PAIRS // max(n, 1))
    for start in range(0, n, rows):
        stop = min(n, start + rows)
        i = np.arange(start, stop)[:, None]
        j = np.arange(start, n)[None, :]
        ci, si, ri = cos[i], sin[i], r[i]
        cj, sj, rj = cos[j], sin[j], r[j]
        det = ci * sj - si * cj          # sin(φj − φi)
        with np.errstate(divide="ignore", invalid="ignore"):
            x = (ri * sj - rj * si) / det
            y = (rj * ci - ri * cj) / det
        ti = -x * si + y * ci
        tj = -x * sj + y * cj
        ok = (j > i) & (np.abs(det) >= ANGLE_TOL)
        ok &= (ti >= t0[i] - tol) & (ti <= t1[i] + tol)
        ok &= (tj >= t0[j] - tol) & (tj <= t1[j] + tol)
        ii, jj = np.nonzero(ok)
        if ii.size == 0:
            continue
        total += ii.size
        if total > max_intersections:
            raise ResourceCapError(
                f"more than {max_intersections} intersections in the clip; raise v_floor, "
                "shrink the clip or set SIRSN_MAX_INTERSECTIONS"
            )
        gi = ii + start
        gj = jj + start
        found.append((
            gi, gj,
            x[ii, jj], y[ii, jj],
            np.clip(ti[ii, jj], t0[gi], t1[gi]),
            np.clip(tj[ii, jj], t0[gj], t1[gj]),
        ))
    if not found:
        empty_i = np.empty(0, dtype=np.int64)
        empty_f = np.empty(0, dtype=float)
        return empty_i, empty_i, empty_f, empty_f, empty_f, empty_f
    return tuple(np.concatenate(cols) for cols in zip(*found))


def _merge_groups(points: np.ndarray, tol: float) -> np.ndarray:
    """Representative index (the smallest in its cluster) for every candidate."""
    parent = np.arange(len(points))
    if len(points) < 2 or tol <= 0:
        return parent
    pairs = cKDTree(points).query_pairs(tol, output_type="ndarray")

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in pairs:
        ra, rb = find(int(a)), find(int(b))
        if ra != rb:
            lo, hi = (ra, rb) if ra < rb else (rb, ra)
            parent[hi] = lo
    return np.array([find(k) for k in range(len(points))])


def build(
    sample: LineSample,
    clip: Disk | None = None,
    max_intersections: int = DEFAULT_MAX_INTERSECTIONS,
    merge_tol: float = MERGE_TOL,
) -> ArrangementGraph:
    """
    Build the intersection skeleton of ``sample`` inside ``clip``.

    Parameters
    ----------
    sample:            Line sample; lines missing the clip are ignored.
    clip:              Disk inside the sample window (defaults to the window).
    max_intersections: Guardrail on the number of interior intersections.
    merge_tol:         Merge distance relative to the clip radius.

    Raises
    ------
    GeometryError    if clip is not inside the window.
    ResourceCapError if the intersection count exceeds max_intersections.
    """
    clip = clip or sample.window
    if not sample.window.contains_disk(clip):
        raise GeometryError(f"clip {clip} is not contained in the window {sample.window}")
    tol = merge_tol * clip.radius

    lines: dict[int, MarkedLine] = {}
    supports: dict[int, tuple[float, float]] = {}
    for ml in sorted(sample.lines, key=lambda m: m.id):
        sup = ml.support(clip)
        if sup is not None:
            lines[ml.id] = ml
            supports[ml.id] = sup

    graph = ArrangementGraph(sample.window, clip, lines, tol)
    graph.supports = supports
    ids = np.fromiter(lines.keys(), dtype=np.int64, count=len(lines))
    phi = np.array([lines[k].phi for k in ids], dtype=float)
    r = np.array([lines[k].r for k in ids], dtype=float)
    t0 = np.array([supports[k][0] for k in ids], dtype=float)
    t1 = np.array([supports[k][1] for k in ids], dtype=float)

    gi, gj, xs, ys, ti, tj = _pairwise_intersections(ids, phi, r, t0, t1, tol, max_intersections)
    n_cross = len(gi)

    # Candidate order: intersections by (i, j), then support ends by line id.
    keys = [f"x{ids[a]}-{ids[b]}" for a, b in zip(gi, gj)]
    members: list[tuple[tuple[int, float], ...]] = [
        ((int(ids[a]), float(ta)), (int(ids[b]), float(tb)))
        for a, b, ta, tb in zip(gi, gj, ti, tj)
    ]
    end_points = []
    for k, lid in enumerate(ids):
        ml = lines[int(lid)]
        for side, t in ((0, t0[k]), (1, t1[k])):
            keys.append(f"b{lid}-{side}")
            members.append(((int(lid), float(t)),))
            end_points.append(ml.line.point_at(float(t)))
    points = np.vstack([
        np.column_stack([xs, ys]) if n_cross else np.empty((0, 2)),
        np.array(end_points) if end_points else np.empty((0, 2)),
    ])

    rep = _merge_groups(points, tol)
    graph.merge_events = int(np.count_nonzero(rep != np.arange(len(rep))))
    if graph.merge_events:
        logger.debug("merged %d candidate vertices (tol=%.3g)", graph.merge_events, tol)

    incident: dict[int, set[int]] = {}
    stations: dict[int, dict[str, float]] = {int(k): {} for k in ids}
    for c, root in enumerate(rep):
        root = int(root)
        vid = keys[root]
        for lid, t in members[c]:
            stations[lid].setdefault(vid, t)
            incident.setdefault(root, set()).add(lid)
    for root, lids in incident.items():
        graph._add_vertex(Vertex(keys[root], float(points[root, 0]), float(points[root, 1]),
                                 tuple(sorted(lids))))

    for lid, where in stations.items():
        ordered = sorted(((t, vid) for vid, t in where.items()))
        graph.stations[lid] = ordered
        speed = lines[lid].v
        for (ta, a), (tb, b) in zip(ordered, ordered[1:]):
            if tb > ta:
                graph._add_edge(Edge.make(f"{lid}|{a}|{b}", a, b, lid, tb - ta, speed))

    logger.debug(
        "arrangement: %d lines, %d intersections, %d vertices, %d edges",
        len(lines), n_cross, len(graph.vertices), len(graph.edges),
    )
    return graph


# ---------------------------------------------------------------------------
# Terminals
# ---------------------------------------------------------------------------

def _line_distances(graph: ArrangementGraph, x: Point):
    """Per supported line: (id, distance to the support, clamped parameter, foot)."""
    rows = []
    for lid, (t0, t1) in graph.supports.items():
        line = graph.lines[lid].line
        t = min(max(line.param(x), t0), t1)
        p = line.point_at(t)
        rows.append((math.hypot(x[0] - p[0], x[1] - p[1]), lid, t, (float(p[0]), float(p[1]))))
    return rows


def _station_near(graph: ArrangementGraph, line_id: int, t: float) -> str | None:
    st = graph.stations[line_id]
    k = bisect.bisect_left(st, t, key=lambda s: s[0])
    for idx in (k - 1, k):
        if 0 <= idx < len(st) and abs(st[idx][0] - t) <= graph.tol:
            return st[idx][1]
    return None


def inject_terminal(
    graph: ArrangementGraph,
    x: Point,
    epsilon: float,
    k_nearest: int | None = None,
    keep_lines=(),
) -> tuple[ArrangementGraph, Terminal]:
    """
    Add an endpoint to a copy of ``graph``.

    The terminal gets a WALK edge at speed ε to the closest point of each of
    its k nearest lines (all lines when there are at most 64, else 64 unless
    ``k_nearest`` says otherwise), plus every line in ``keep_lines``; the foot
    splits the line edge containing it. A terminal that coincides with an
    existing vertex reuses it, and zero-length walks are elided. Every pair
    of terminals is joined by a direct WALK edge.

    Returns
    -------
    (new graph, Terminal)
    """
    if not epsilon > 0:
        raise UsageError(f"epsilon must be positive, got {epsilon}")
    if graph.epsilon is not None and graph.epsilon != epsilon:
        raise UsageError(
            f"graph already uses walk speed {graph.epsilon}; cannot inject at {epsilon}"
        )
    x = (float(x[0]), float(x[1]))
    if not graph.clip.contains(x):
        raise GeometryError(f"terminal {x} lies outside the clip {graph.clip}")

    g = graph.copy()
    g.epsilon = epsilon
    index = len(g.terminals)
    rows = sorted(_line_distances(g, x))

    tid = None
    for term in g.terminals:
        if math.dist(term.point, x) <= g.tol:
            tid = term.vertex
            break
    if tid is None:
        for dist, lid, t, _ in rows:
            if dist > g.tol:
                break
            tid = _station_near(g, lid, t)
            if tid is not None:
                break
    if tid is None:
        tid = f"t{index}"
        g._add_vertex(Vertex(tid, x[0], x[1], ()))

    access: list[str] = []
    for dist, lid, t, _ in rows:
        if dist > g.tol:
            break
        if _station_near(g, lid, t) is None:
            access += g._split(lid, t, tid)

    if k_nearest is None:
        k_nearest = len(rows) if len(rows) <= DEFAULT_K_NEAREST else DEFAULT_K_NEAREST
    keep = set(keep_lines)
    chosen = [row for k, row in enumerate(rows) if k < k_nearest or row[1] in keep]
    for dist, lid, t, foot in chosen:
        if dist <= g.tol:
            continue
        fid = _station_near(g, lid, t)
        if fid is None:
            fid = f"f{index}-{lid}"
            g._add_vertex(Vertex(fid, foot[0], foot[1], ()))
            g._split(lid, t, fid)
        walk = Edge.make(f"w|{tid}|{fid}", tid, fid, None, dist, epsilon)
        if g._add_edge(walk):
            access.append(walk.id)

    for term in g.terminals:
        if term.vertex == tid:
            continue
        length = math.dist(term.point, x)
        if length > 0.0:
            g._add_edge(Edge.make(f"w|{term.vertex}|{tid}", term.vertex, tid, None, length, epsilon))

    terminal = Terminal(x, tid, tuple(access))
    g.terminals.append(terminal)
    logger.debug("terminal %s at %s: %d access edges", tid, x, len(access))
    return g, terminal


def access_lines(graph: ArrangementGraph, terminal: Terminal) -> set[int]:
    """Lines a terminal reaches through its access edges (for nested access sets)."""
    found: set[int] = set()
    for eid in terminal.access:
        edge = graph.edges.get(eid)
        if edge is None:
            continue
        if edge.is_walk:
            foot = graph.vertices[edge.other(terminal.vertex)]
            found.update(foot.lines)
        else:
            found.add(edge.line)
    found.update(graph.vertices[terminal.vertex].lines)
    return found
