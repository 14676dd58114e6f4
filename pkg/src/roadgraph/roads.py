"""Road edges between nodes, and the assembled road graph."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cluster import NOISE, SpatialIndex, dbscan
from .geo import GeoCoord, to_geo_array

log = logging.getLogger(__name__)

OPEN = None
NODE_KINDS = ("intersection", "load", "dropoff")
REPRESENTATIVES = ("median", "random")


class GraphInvariantError(RuntimeError):
    """The assembled graph violates a structural invariant; ``problems`` lists them."""

    def __init__(self, problems: list[str]):
        super().__init__("road graph invariant violated:\n  " + "\n  ".join(problems))
        self.problems = problems


@dataclass(frozen=True)
class RoadParams:
    d_node: float = 30.0
    eps_road: float = 15.0
    n_min_road: int = 5
    trim_margin: float = 0.0
    representative: str = "median"
    prune_dead_ends: bool = True
    interp_spacing: float = 5.0
    seed: int = 0

    def __post_init__(self):
        for name in ("d_node", "eps_road", "interp_spacing"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.n_min_road < 1:
            raise ValueError("n_min_road must be >= 1")
        if self.trim_margin < 0:
            raise ValueError("trim_margin must be non-negative")
        if self.representative not in REPRESENTATIVES:
            raise ValueError(f"representative must be one of {REPRESENTATIVES}")


@dataclass
class Node:
    node_id: int
    kind: str
    x: float
    y: float
    lat: float | None = None
    lon: float | None = None
    support: int = 0

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass
class Edge:
    edge_id: int
    u: int
    v: int | None
    polyline: np.ndarray
    support: int
    trip_id: str = ""

    @property
    def endpoints(self) -> tuple:
        return (self.u, self.v)


@dataclass
class RoadGraph:
    nodes: list[Node] = field(default_factory=list)
    edges: list[Edge] = field(default_factory=list)
    origin: GeoCoord | None = None

    def node(self, node_id: int) -> Node:
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise KeyError(node_id)

    def degree(self, node_id: int) -> int:
        return sum((e.u == node_id) + (e.v == node_id) for e in self.edges)

    def check(self, d_node: float | None = None, spacing: float | None = None) -> list[str]:
        """Human-readable list of invariant violations (empty when the graph is sound)."""
        problems = []
        ids = [n.node_id for n in self.nodes]
        if len(set(ids)) != len(ids):
            problems.append("duplicate node ids")
        pos = {n.node_id: np.array(n.position) for n in self.nodes}
        for n in self.nodes:
            if n.kind not in NODE_KINDS:
                problems.append(f"node {n.node_id}: unknown kind {n.kind!r}")
            if not (math.isfinite(n.x) and math.isfinite(n.y)):
                problems.append(f"node {n.node_id}: non-finite position")
        eids = [e.edge_id for e in self.edges]
        if len(set(eids)) != len(eids):
            problems.append("duplicate edge ids")
        for e in self.edges:
            line = np.asarray(e.polyline)
            if line.ndim != 2 or len(line) < 2:
                problems.append(f"edge {e.edge_id}: polyline needs at least two points")
                continue
            for end, node_id in ((line[0], e.u), (line[-1], e.v)):
                if node_id is OPEN:
                    continue
                if node_id not in pos:
                    problems.append(f"edge {e.edge_id}: unknown node {node_id}")
                elif d_node is not None and np.hypot(*(end - pos[node_id])) > d_node + 1e-6:
                    problems.append(f"edge {e.edge_id}: terminus too far from node {node_id}")
            if e.u is OPEN:
                problems.append(f"edge {e.edge_id}: first endpoint must be a node")
            if spacing is not None:
                gaps = np.sqrt(((line[1:] - line[:-1]) ** 2).sum(axis=1))
                if (np.abs(gaps - spacing) > 0.1 * spacing + 1e-9).any():
                    problems.append(f"edge {e.edge_id}: spacing deviates more than 10%")
        return problems

    def with_geo(self, origin: GeoCoord) -> "RoadGraph":
        """Fill node latitude/longitude from ``origin``."""
        for n in self.nodes:
            lat, lon = to_geo_array(n.x, n.y, origin)
            n.lat, n.lon = float(lat), float(lon)
        self.origin = origin
        return self


@dataclass
class Segment:
    """Part of a trip between two consecutive cuts; ``u``/``v`` are node ids or ``OPEN``."""

    trip_id: str
    points: np.ndarray
    u: int | None
    v: int | None
    u_pos: tuple | None = None
    v_pos: tuple | None = None


# --------------------------------------------------------------------------
# resampling


def _circle_exit(c, a, b, h, t0):
    """Smallest ``t >= t0`` on segment ``a + t (b - a)`` at distance ``h`` from ``c``."""
    d = b - a
    f = a - c
    A = d @ d
    if A == 0:
        return None
    B = 2 * (f @ d)
    C = f @ f - h * h
    disc = B * B - 4 * A * C
    if disc < 0:
        return None
    r = math.sqrt(disc)
    for t in sorted(((-B - r) / (2 * A), (-B + r) / (2 * A))):
        if t0 - 1e-12 <= t <= 1.0:
            return t
    return None


def _chord_walk(line: np.ndarray, h: float, max_steps: int | None = None, where: list | None = None):
    """Points along ``line`` with consecutive straight-line distance exactly ``h``.

    ``where`` collects the segment index of every emitted point.
    """
    out = [line[0]]
    if where is not None:
        where.append(0)
    c = line[0]
    i, t = 0, 0.0
    while max_steps is None or len(out) <= max_steps:
        found = None
        while i < len(line) - 1:
            tt = _circle_exit(c, line[i], line[i + 1], h, t)
            if tt is not None:
                found = tt
                break
            i += 1
            t = 0.0
        if found is None:
            break
        t = found
        c = line[i] + t * (line[i + 1] - line[i])
        out.append(c)
        if where is not None:
            where.append(i)
    return np.array(out)


def _fit_steps(line: np.ndarray, steps: int, spacing: float):
    """Walk ``steps`` equal chords from the start so the last one ends on the far end."""
    end = line[-1]

    def residual(h):
        pts = _chord_walk(line, h, max_steps=steps - 1)
        if len(pts) < steps:
            return -h, pts
        return np.hypot(*(end - pts[-1])) - h, pts

    lo, hi = 0.5 * spacing, 2.0 * spacing
    if not residual(lo)[0] > 0 > residual(hi)[0]:
        return None
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if residual(mid)[0] > 0:
            lo = mid
        else:
            hi = mid
    _, pts = residual(0.5 * (lo + hi))
    if len(pts) < steps:
        return None
    return np.vstack([pts[:steps], end])


def _worst_gap(pts: np.ndarray, spacing: float) -> float:
    gaps = np.sqrt(((pts[1:] - pts[:-1]) ** 2).sum(axis=1))
    return float(np.abs(gaps - spacing).max())


def resample_chord(polyline, spacing: float, keep_end: bool = True) -> np.ndarray:
    """Resample so that every consecutive pair is (nearly) ``spacing`` apart in a straight line.

    The start is kept. A walk with exact ``spacing`` usually leaves a short
    last step; the last few steps are then re-fitted with a common, slightly
    different length that lands on the far end. Several tail lengths are
    tried because jittery input makes the walk jump, and the most even
    result wins. If none is within 10% and ``keep_end`` is false, the plain
    walk is returned; it stops less than ``spacing`` short of the far end.
    """
    line = np.asarray(polyline, dtype=float)
    keep = np.concatenate([[True], (np.abs(np.diff(line, axis=0)) > 0).any(axis=1)])
    line = line[keep]
    if len(line) < 2:
        return np.repeat(line[:1], 2, axis=0) if len(line) else line
    end = line[-1]
    where: list = []
    plain = _chord_walk(line, spacing, where=where)
    tail = np.hypot(*(end - plain[-1]))
    best = np.vstack([plain, end]) if tail > 0 else plain
    if tail == 0 or tail >= 0.9 * spacing:
        return best
    k = len(plain) - 1
    if k == 0:
        return best
    for m in (8, 12, 16, 24, 32, 48, 64, k):
        j = max(0, k - m)
        sub = np.vstack([plain[j], line[where[j] + 1:]])
        for n in (k - j + 1, k - j):
            if n < 1:
                continue
            pts = _fit_steps(sub, n, spacing)
            if pts is None:
                continue
            cand = np.vstack([plain[:j], pts])
            if _worst_gap(cand, spacing) < _worst_gap(best, spacing):
                best = cand
        if _worst_gap(best, spacing) <= 0.05 * spacing:
            break
        if j == 0:
            break
    if not keep_end and _worst_gap(best, spacing) > 0.1 * spacing and len(plain) > 1:
        return plain
    return best


# --------------------------------------------------------------------------
# segmentation


def _node_table(nodes):
    ids = [n.node_id for n in nodes]
    pos = np.array([n.position for n in nodes], dtype=float).reshape(-1, 2)
    return ids, pos


def cut_points(xy: np.ndarray, nodes, d_node: float) -> list[tuple[int, int]]:
    """``(point index, node id)`` of the closest point in each run of points within ``d_node`` of a node."""
    ids, pos = _node_table(nodes)
    cuts = {}
    for k, nid in enumerate(ids):
        d = np.sqrt(((xy - pos[k]) ** 2).sum(axis=1))
        inside = d <= d_node
        if not inside.any():
            continue
        edges = np.diff(np.concatenate([[0], inside.astype(np.int8), [0]]))
        starts = np.flatnonzero(edges == 1)
        stops = np.flatnonzero(edges == -1)
        for a, b in zip(starts, stops):
            j = a + int(np.argmin(d[a:b]))
            # two nodes claiming one point: the closer node wins
            if j not in cuts or d[j] < cuts[j][1]:
                cuts[j] = (nid, d[j])
    return [(j, cuts[j][0]) for j in sorted(cuts)]


def split_at_nodes(trip, nodes, p: RoadParams | None = None) -> list[Segment]:
    """Split a trip at its closest approach to every node it passes."""
    p = p or RoadParams()
    xy = trip.xy if hasattr(trip, "xy") else np.asarray(trip, dtype=float)
    trip_id = getattr(trip, "trip_id", "")
    pos = {n.node_id: n.position for n in nodes}
    cuts = cut_points(xy, nodes, p.d_node)
    bounds = [(0, OPEN)] + cuts + [(len(xy) - 1, OPEN)]
    out = []
    for (a, u), (b, v) in zip(bounds[:-1], bounds[1:]):
        if b - a < 1:
            continue
        out.append(Segment(trip_id, xy[a:b + 1], u, v, pos.get(u), pos.get(v)))
    return out


def group_key(seg: Segment):
    ends = [n for n in (seg.u, seg.v) if n is not OPEN]
    if not ends:
        return None
    return tuple(sorted(ends)) if len(ends) == 2 else (ends[0],)


def group_segments(segments) -> dict:
    """Segments keyed by their unordered node pair, or by one node for dead ends."""
    groups: dict = {}
    for seg in segments:
        key = group_key(seg)
        if key is not None:
            groups.setdefault(key, []).append(seg)
    return dict(sorted(groups.items(), key=lambda kv: tuple(-1 if x is None else x for x in kv[0])))


# --------------------------------------------------------------------------
# edge inference


def _trim_mask(seg: Segment, radius: float) -> np.ndarray:
    keep = np.ones(len(seg.points), dtype=bool)
    for end in (seg.u_pos, seg.v_pos):
        if end is None:
            continue
        d = np.sqrt(((seg.points - np.asarray(end)) ** 2).sum(axis=1))
        keep &= d > radius
    return keep


def _orient(line: np.ndarray, seg: Segment, key) -> np.ndarray:
    first = key[0]
    if seg.v == first and seg.u != first:
        return line[::-1]
    return line


@dataclass
class EdgeDraft:
    u: int
    v: int | None
    polyline: np.ndarray
    support: int
    trip_id: str
    cluster: int


def infer_edges(key, segments, p: RoadParams | None = None) -> list[EdgeDraft]:
    """One edge per dominant road cluster among the segments of one group."""
    p = p or RoadParams()
    segs = sorted(segments, key=lambda s: (s.trip_id, s.points[0, 0], s.points[0, 1]))
    radius = p.d_node + p.trim_margin
    trimmed = [s.points[_trim_mask(s, radius)] for s in segs]
    sizes = np.array([len(t) for t in trimmed])
    if sizes.sum() == 0:
        log.info("group %s: nothing left after trimming", key)
        return []
    labels = dbscan(np.concatenate(trimmed), p.eps_road, p.n_min_road)
    if (labels == NOISE).all():
        log.info("group %s: all points are noise", key)
        return []
    per_seg = np.split(labels, np.cumsum(sizes)[:-1])

    dominant = []
    for lab in per_seg:
        lab = lab[lab != NOISE]
        if lab.size == 0:
            dominant.append(None)
            continue
        counts = np.bincount(lab)
        dominant.append(int(np.argmax(counts)))

    v = key[1] if len(key) == 2 else OPEN
    rng = np.random.default_rng([p.seed, *[k if k is not None else -1 for k in key]])
    out = []
    for c in sorted({d for d in dominant if d is not None}):
        members = [k for k, d in enumerate(dominant) if d == c]
        counts = np.array([int((per_seg[k] == c).sum()) for k in members])
        median = np.sort(counts)[(len(counts) - 1) // 2]
        tied = [m for m, n in zip(members, counts) if n == median]
        if p.representative == "random":
            pick = tied[int(rng.integers(len(tied)))]
        else:
            pick = min(tied, key=lambda m: segs[m].trip_id)
        rep = segs[pick]
        line = _orient(rep.points, rep, key)
        line = _resample_edge(line, key, rep, p)
        out.append(EdgeDraft(key[0], v, line, len(members), rep.trip_id, c))
    return out


def _resample_edge(line, key, rep: Segment, p: RoadParams) -> np.ndarray:
    """Resample a representative; its far end may move only if it stays near its node."""
    out = resample_chord(line, p.interp_spacing, keep_end=False)
    if np.array_equal(out[-1], line[-1]) or key[1] is OPEN:
        return out
    far = rep.v_pos if rep.v == key[1] else rep.u_pos
    if far is None or np.hypot(*(out[-1] - np.asarray(far, dtype=float))) > p.d_node:
        return resample_chord(line, p.interp_spacing)
    return out


def _covered(line: np.ndarray, others: list[np.ndarray], tol: float) -> bool:
    if not others:
        return False
    idx = SpatialIndex(np.concatenate(others))
    return bool((idx.count_within(line, tol) > 0).all())


def prune_covered_dead_ends(drafts: list[EdgeDraft], positions: dict, p: RoadParams) -> list[EdgeDraft]:
    """Drop dead-end edges that only retrace another edge (within ``eps_road``).

    Trips are cut short at their end by preprocessing, so the last stretch
    before the final node often shows up as a dead end lying on a real edge.
    """
    keep = []
    for k, e in enumerate(drafts):
        if e.v is not OPEN:
            keep.append(e)
            continue
        d = np.sqrt(((e.polyline - np.asarray(positions[e.u])) ** 2).sum(axis=1))
        outside = e.polyline[d > p.d_node + p.trim_margin]
        others = [o.polyline for j, o in enumerate(drafts) if j != k and (o.v is not OPEN or j < k)]
        if len(outside) and _covered(outside, others, p.eps_road):
            log.info("dropping dead end at node %s retracing another edge", e.u)
            continue
        keep.append(e)
    return keep


def build_graph(trips, intersections, action_nodes, p: RoadParams | None = None,
                origin: GeoCoord | None = None, workers: int = 1) -> RoadGraph:
    """Number the nodes, infer edges from all trips and check the result.

    Node ids run over intersections first, then load nodes, then drop-off nodes.
    """
    p = p or RoadParams()
    nodes = []
    for it in intersections:
        nodes.append(Node(len(nodes), "intersection", float(it.x), float(it.y),
                          support=int(getattr(it, "outgoing_roads", 0))))
    for kind in ("load", "dropoff"):
        for a in action_nodes:
            if a.kind == kind:
                nodes.append(Node(len(nodes), kind, float(a.x), float(a.y), support=int(a.support)))

    segments = []
    for trip in trips:
        if len(trip) >= 2:
            segments.extend(split_at_nodes(trip, nodes, p))
    groups = group_segments(segments)
    items = list(groups.items())
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda kv: infer_edges(kv[0], kv[1], p), items))
    else:
        parts = [infer_edges(k, segs, p) for k, segs in items]
    drafts = [d for part in parts for d in part]
    positions = {n.node_id: n.position for n in nodes}
    if p.prune_dead_ends:
        drafts = prune_covered_dead_ends(drafts, positions, p)

    edges = [Edge(k, d.u, d.v, d.polyline, d.support, d.trip_id) for k, d in enumerate(drafts)]
    graph = RoadGraph(nodes, edges)
    if origin is not None:
        graph.with_geo(origin)
    problems = graph.check(p.d_node)
    if problems:
        raise GraphInvariantError(problems)
    for msg in graph.check(spacing=p.interp_spacing):
        log.warning(msg)
    return graph
