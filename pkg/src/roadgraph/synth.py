"""Synthetic construction sites: ground-truth road graphs and noisy truck trips."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy.signal import lfilter
from scipy.spatial import Delaunay

from .geo import GeoCoord, to_geo_array
from .roads import Edge, Node, RoadGraph, resample_chord
from .trips import Event, Trip

DEFAULT_ORIGIN = GeoCoord(59.9, 10.4)


class SiteInfeasible(ValueError):
    """The requested site cannot be laid out under the spacing constraints."""


@dataclass(frozen=True)
class Tunnel:
    """Disc where a trip loses its signal with probability ``prob``."""

    x: float
    y: float
    radius: float
    prob: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("tunnel radius must be positive")
        if not 0 <= self.prob <= 1:
            raise ValueError("tunnel prob must lie in [0, 1]")


@dataclass(frozen=True)
class NoiseModel:
    jitter_sigma: float = 1.0
    dropout_prob: float = 0.0
    tunnels: tuple = ()
    endpoint_noise: float = 0.0
    endpoint_zone: float = 100.0
    invalid_fix_prob: float = 0.0
    park_sigma: float = 3.0

    def __post_init__(self):
        object.__setattr__(self, "tunnels", tuple(self.tunnels))
        for name in ("dropout_prob", "invalid_fix_prob"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        for name in ("jitter_sigma", "endpoint_noise", "endpoint_zone", "park_sigma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass
class SiteScenario:
    ground_truth: RoadGraph
    seed: int = 0
    n_trips: int = 300
    speed_median_kmh: float = 8.33
    speed_mean_kmh: float = 9.36
    speed_cap_kmh: float = 25.93
    speed_floor_kmh: float = 1.0
    speed_corr: float = 0.95
    cadence_median_s: float = 2.0
    cadence_sigma: float = 0.15
    min_timestep_s: float = 0.88
    dwell_updates: tuple = (4, 12)
    via_prob: float = 0.5
    detour: float = 0.5
    noise: NoiseModel = field(default_factory=NoiseModel)
    start_time: float = 1_700_000_000.0

    def __post_init__(self):
        if self.n_trips < 0:
            raise ValueError("n_trips must be non-negative")
        if not 0 < self.speed_median_kmh < self.speed_mean_kmh:
            raise ValueError("need 0 < speed median < speed mean")
        if not 0 <= self.via_prob <= 1:
            raise ValueError("via_prob must lie in [0, 1]")
        if not 0 <= self.speed_corr < 1:
            raise ValueError("speed_corr must lie in [0, 1)")
        if self.ground_truth.origin is None:
            self.ground_truth.origin = DEFAULT_ORIGIN

    @property
    def origin(self) -> GeoCoord:
        return self.ground_truth.origin

    @property
    def speed_sigma(self) -> float:
        """Log-space spread of the speed distribution implied by its median and mean."""
        return math.sqrt(2.0 * math.log(self.speed_mean_kmh / self.speed_median_kmh))


# --------------------------------------------------------------------------
# geometry helpers


def _point_segment_distance(p, a, b) -> float:
    p, a, b = (np.asarray(v, dtype=float) for v in (p, a, b))
    d = b - a
    L2 = d @ d
    t = 0.0 if L2 == 0 else min(max((p - a) @ d / L2, 0.0), 1.0)
    return float(np.hypot(*(p - (a + t * d))))


def _segments_cross(a, b, c, d) -> bool:
    def orient(p, q, r):
        return np.sign((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]))

    return (orient(a, b, c) * orient(a, b, d) < 0) and (orient(c, d, a) * orient(c, d, b) < 0)


def _segment_distance(a, b, c, d) -> float:
    if _segments_cross(a, b, c, d):
        return 0.0
    return min(
        _point_segment_distance(a, c, d),
        _point_segment_distance(b, c, d),
        _point_segment_distance(c, a, b),
        _point_segment_distance(d, a, b),
    )


def _angle_gap(existing, theta) -> float:
    if not existing:
        return math.pi
    diffs = [abs((theta - e + math.pi) % (2 * math.pi) - math.pi) for e in existing]
    return min(diffs)


def _direction(a, b) -> float:
    return math.atan2(b[1] - a[1], b[0] - a[0])


class _Layout:
    """Mutable straight-line plan of a site used while sampling."""

    def __init__(self):
        self.pos: list[np.ndarray] = []
        self.kind: list[str] = []
        self.edges: list[tuple[int, int]] = []

    def add_node(self, xy, kind):
        self.pos.append(np.asarray(xy, dtype=float))
        self.kind.append(kind)
        return len(self.pos) - 1

    def directions(self, n):
        out = []
        for a, b in self.edges:
            if a == n:
                out.append(_direction(self.pos[a], self.pos[b]))
            elif b == n:
                out.append(_direction(self.pos[b], self.pos[a]))
        return out

    def degree(self, n):
        return sum((a == n) + (b == n) for a, b in self.edges)

    def edge_ok(self, a, b, min_angle, clearance) -> bool:
        pa, pb = self.pos[a], self.pos[b]
        if _angle_gap(self.directions(a), _direction(pa, pb)) < min_angle:
            return False
        if _angle_gap(self.directions(b), _direction(pb, pa)) < min_angle:
            return False
        for k, pk in enumerate(self.pos):
            if k not in (a, b) and _point_segment_distance(pk, pa, pb) < clearance:
                return False
        for c, d in self.edges:
            if {c, d} & {a, b}:
                continue
            if _segment_distance(pa, pb, self.pos[c], self.pos[d]) < clearance:
                return False
        return True

    def node_ok(self, xy, clearance, skip=()) -> bool:
        for k, pk in enumerate(self.pos):
            if k not in skip and np.hypot(*(pk - xy)) < clearance:
                return False
        for c, d in self.edges:
            if c in skip or d in skip:
                continue
            if _point_segment_distance(xy, self.pos[c], self.pos[d]) < clearance:
                return False
        return True


def _graph_from_layout(layout: _Layout, origin: GeoCoord, spacing: float) -> RoadGraph:
    # canonical numbering: intersections, loads, dropoffs
    order = [k for kind in ("intersection", "load", "dropoff")
             for k in range(len(layout.pos)) if layout.kind[k] == kind]
    new_id = {old: new for new, old in enumerate(order)}
    nodes = []
    for old in order:
        x, y = layout.pos[old]
        nodes.append(Node(new_id[old], layout.kind[old], float(x), float(y)))
    edges = []
    pairs = sorted(tuple(sorted((new_id[a], new_id[b]))) for a, b in layout.edges)
    for k, (u, v) in enumerate(pairs):
        line = resample_chord([nodes[u].position, nodes[v].position], spacing)
        edges.append(Edge(k, u, v, line, 0))
    return RoadGraph(nodes, edges).with_geo(origin)


# --------------------------------------------------------------------------
# site generation


def star_site(
    angles_deg,
    lengths,
    kinds,
    center=(500.0, 500.0),
    origin: GeoCoord = DEFAULT_ORIGIN,
    spacing: float = 5.0,
) -> RoadGraph:
    """One intersection with straight arms, each ending in a load or drop-off node."""
    if len(angles_deg) < 3:
        raise SiteInfeasible("an intersection needs at least three arms")
    layout = _Layout()
    c = layout.add_node(center, "intersection")
    for ang, length, kind in zip(angles_deg, lengths, kinds):
        t = math.radians(ang)
        end = layout.add_node(np.asarray(center) + length * np.array([math.cos(t), math.sin(t)]), kind)
        layout.edges.append((c, end))
    return _graph_from_layout(layout, origin, spacing)


def polyline_site(nodes, edges, origin: GeoCoord = DEFAULT_ORIGIN, spacing: float = 5.0) -> RoadGraph:
    """Site from explicit geometry.

    ``nodes`` is a list of ``(kind, x, y)``; ``edges`` a list of ``(u, v, points)``
    whose polylines run from node ``u`` to node ``v`` (indices into ``nodes``).
    """
    out_nodes = [Node(k, kind, float(x), float(y)) for k, (kind, x, y) in enumerate(nodes)]
    out_edges = []
    for k, (u, v, pts) in enumerate(edges):
        line = np.asarray(pts, dtype=float).reshape(-1, 2)
        for end, node in ((line[0], out_nodes[u]), (line[-1], out_nodes[v])):
            if np.hypot(end[0] - node.x, end[1] - node.y) > 1e-6:
                raise SiteInfeasible(f"edge {k} does not start and end at its nodes")
        out_edges.append(Edge(k, u, v, resample_chord(line, spacing), 0))
    return RoadGraph(out_nodes, out_edges).with_geo(origin)


def straight_site(length: float = 1000.0, heading_deg: float = 30.0, start=(100.0, 100.0),
                  origin: GeoCoord = DEFAULT_ORIGIN, spacing: float = 5.0) -> RoadGraph:
    """A single road from a load node to a drop-off node."""
    layout = _Layout()
    a = layout.add_node(start, "load")
    t = math.radians(heading_deg)
    b = layout.add_node(np.asarray(start) + length * np.array([math.cos(t), math.sin(t)]), "dropoff")
    layout.edges.append((a, b))
    return _graph_from_layout(layout, origin, spacing)


def generate_site(
    seed: int = 0,
    n_intersections: int = 6,
    n_load: int = 3,
    n_dump: int = 2,
    area: tuple = (1400.0, 1400.0),
    min_spacing: float = 220.0,
    spur_length: tuple = (170.0, 260.0),
    min_angle_deg: float = 60.0,
    clearance: float = 70.0,
    max_degree: int = 4,
    origin: GeoCoord = DEFAULT_ORIGIN,
    spacing: float = 5.0,
    max_tries: int = 500,
    d_int_clust: float = 15.0,
) -> RoadGraph:
    """Random planar site whose intersections all have degree 3 to ``max_degree``.

    Intersections are spread with a minimum spacing, joined along a Delaunay
    triangulation (spanning tree first, extra edges while angle, degree and
    clearance rules allow), and every load and drop-off node hangs off an
    intersection on a straight spur placed in the widest angular gap. Roads are
    straight. Raises :class:`SiteInfeasible` when no layout is found.
    """
    if min(n_intersections, n_load, n_dump) < 0:
        raise ValueError("counts must be non-negative")
    width, height = (float(v) for v in area)
    if not (width > 0 and height > 0):
        raise ValueError("area must be positive")
    if min_spacing < 2 * d_int_clust:
        raise SiteInfeasible("minimum spacing below twice the candidate merge distance")
    rng = np.random.default_rng(seed)
    n_act = n_load + n_dump

    if n_intersections == 0:
        if n_load != 1 or n_dump != 1:
            raise SiteInfeasible("without intersections only a single load-dump road is possible")
        length = min(width, height) * 0.6
        theta = float(rng.uniform(0, 2 * math.pi))
        start = np.array([width, height]) / 2 - 0.5 * length * np.array([math.cos(theta), math.sin(theta)])
        return straight_site(length, math.degrees(theta), start, origin, spacing)
    if n_intersections == 1 and n_act < 3:
        raise SiteInfeasible("a lone intersection needs at least three action nodes")
    if n_intersections == 2 and n_act < 4:
        raise SiteInfeasible("two intersections need at least four action nodes")
    packing = n_intersections * math.pi * (min_spacing / 2) ** 2
    if packing > 0.7 * width * height:
        raise SiteInfeasible("area too small for the requested intersections")

    min_angle = math.radians(min_angle_deg)
    margin = spur_length[0] * 0.5
    for _ in range(max_tries):
        layout = _try_layout(rng, n_intersections, n_load, n_dump, width, height, margin,
                             min_spacing, spur_length, min_angle, clearance, max_degree)
        if layout is not None:
            return _graph_from_layout(layout, origin, spacing)
    raise SiteInfeasible(f"no layout found in {max_tries} attempts")


def _try_layout(rng, n, n_load, n_dump, width, height, margin, min_spacing, spur_length,
                min_angle, clearance, max_degree):
    layout = _Layout()
    pts = []
    for _ in range(200 * n):
        if len(pts) == n:
            break
        p = rng.uniform([margin, margin], [width - margin, height - margin])
        if all(np.hypot(*(p - q)) >= min_spacing for q in pts):
            pts.append(p)
    if len(pts) < n:
        return None
    for p in pts:
        layout.add_node(p, "intersection")

    if n >= 3:
        try:
            tri = Delaunay(np.array(pts))
        except Exception:
            return None
        cand = sorted({tuple(sorted((int(s[i]), int(s[j]))))
                       for s in tri.simplices for i, j in ((0, 1), (1, 2), (0, 2))})
    elif n == 2:
        cand = [(0, 1)]
    else:
        cand = []

    # spanning tree from the shortest candidates
    lengths = {e: float(np.hypot(*(pts[e[0]] - pts[e[1]]))) for e in cand}
    comp = list(range(n))

    def find(a):
        while comp[a] != a:
            a = comp[a]
        return a

    for e in sorted(cand, key=lambda e: (lengths[e], e)):
        ra, rb = find(e[0]), find(e[1])
        if ra == rb:
            continue
        if not layout.edge_ok(*e, min_angle, clearance):
            return None
        layout.edges.append(e)
        comp[ra] = rb
    if len({find(k) for k in range(n)}) > 1:
        return None

    # extra edges, favoring nodes short of degree three
    rest = [e for e in cand if e not in layout.edges]
    rng.shuffle(rest)
    rest.sort(key=lambda e: min(layout.degree(e[0]), layout.degree(e[1])))
    spare = n_load + n_dump
    for e in rest:
        deficit = sum(max(0, 3 - layout.degree(k)) for k in range(n))
        if deficit <= spare and rng.random() < 0.5:
            continue
        if max(layout.degree(e[0]), layout.degree(e[1])) >= max_degree:
            continue
        if layout.edge_ok(*e, min_angle, clearance):
            layout.edges.append(e)

    # spurs
    kinds = ["load"] * n_load + ["dropoff"] * n_dump
    for kind in kinds:
        hosts = sorted(range(n), key=lambda k: (layout.degree(k), rng.random()))
        placed = False
        for h in hosts:
            if layout.degree(h) >= max_degree:
                continue
            dirs = sorted(layout.directions(h))
            if dirs:
                gaps = [((dirs[(i + 1) % len(dirs)] - dirs[i]) % (2 * math.pi) or 2 * math.pi, i)
                        for i in range(len(dirs))]
                gap, i = max(gaps)
                if gap < 2 * min_angle:
                    continue
                theta = dirs[i] + gap / 2 + rng.uniform(-0.2, 0.2) * (gap - 2 * min_angle)
            else:
                theta = rng.uniform(0, 2 * math.pi)
            length = rng.uniform(*spur_length)
            end = layout.pos[h] + length * np.array([math.cos(theta), math.sin(theta)])
            if not (0 <= end[0] <= width and 0 <= end[1] <= height):
                continue
            if not layout.node_ok(end, clearance, skip=(h,)):
                continue
            k = layout.add_node(end, kind)
            if not layout.edge_ok(h, k, min_angle, clearance):
                layout.pos.pop()
                layout.kind.pop()
                continue
            layout.edges.append((h, k))
            placed = True
            break
        if not placed:
            return None

    if any(not 3 <= layout.degree(k) <= max_degree for k in range(n)):
        return None
    return layout


# --------------------------------------------------------------------------
# trip simulation


def _road_network(graph: RoadGraph) -> nx.Graph:
    g = nx.Graph()
    for n in graph.nodes:
        g.add_node(n.node_id, kind=n.kind)
    for e in graph.edges:
        if e.v is None:
            continue
        line = np.asarray(e.polyline)
        length = float(np.hypot(*np.diff(line, axis=0).T).sum())
        g.add_edge(e.u, e.v, length=length, edge=e.edge_id)
    return g


def _route(g: nx.Graph, a, b, rng, detour: float):
    weights = {}
    for u, v, data in sorted(g.edges(data=True), key=lambda t: (min(t[0], t[1]), max(t[0], t[1]))):
        weights[(u, v)] = weights[(v, u)] = data["length"] * (1.0 + detour * rng.random())
    try:
        return nx.shortest_path(g, a, b, weight=lambda u, v, d: weights[(u, v)])
    except nx.NetworkXNoPath:
        raise ValueError(f"nodes {a} and {b} are not connected") from None


def _leg(g, a, b, rng, scenario: SiteScenario, inner_edges):
    path = _route(g, a, b, rng, scenario.detour)
    if inner_edges and rng.random() < scenario.via_prob:
        u, v = inner_edges[int(rng.integers(len(inner_edges)))]
        if rng.random() < 0.5:
            u, v = v, u
        try:
            first = _route(g, a, u, rng, scenario.detour)
            last = _route(g, v, b, rng, scenario.detour)
        except ValueError:
            first = last = None
        if first is not None:
            via = first + last
            if len(set(via)) == len(via):
                path = via
    return path


def _path_polyline(graph: RoadGraph, path) -> np.ndarray:
    edges = {}
    for e in graph.edges:
        edges[(e.u, e.v)] = np.asarray(e.polyline)
        edges[(e.v, e.u)] = np.asarray(e.polyline)[::-1]
    parts = [edges[(a, b)] if k == 0 else edges[(a, b)][1:] for k, (a, b) in enumerate(zip(path, path[1:]))]
    return np.vstack(parts)


def _sample_leg(line: np.ndarray, rng, scenario: SiteScenario):
    """Arc positions, timesteps and speeds while driving ``line`` from end to end."""
    seg = np.hypot(*np.diff(line, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    sigma = scenario.speed_sigma
    mu = math.log(scenario.speed_median_kmh)
    rho = scenario.speed_corr
    est = int(total / (scenario.speed_median_kmh / 3.6 * scenario.cadence_median_s) * 2) + 16
    s_all, dt_all, v_all = [], [], []
    s, z = 0.0, float(rng.standard_normal())
    while s < total:
        eps = rng.standard_normal(est)
        zs, _ = lfilter([math.sqrt(1 - rho * rho)], [1.0, -rho], eps, zi=[rho * z])
        z = float(zs[-1])
        v = np.clip(np.exp(mu + sigma * zs), scenario.speed_floor_kmh, scenario.speed_cap_kmh)
        dt = np.maximum(
            scenario.cadence_median_s * np.exp(scenario.cadence_sigma * rng.standard_normal(est)),
            scenario.min_timestep_s,
        )
        steps = np.cumsum(v / 3.6 * dt)
        s_chunk = s + np.concatenate([[0.0], steps[:-1]])
        keep = s_chunk < total
        s_all.append(s_chunk[keep])
        dt_all.append(dt[keep])
        v_all.append(v[keep])
        s = s + steps[-1]
        if not keep.all():
            break
    s = np.concatenate(s_all)
    dt = np.concatenate(dt_all)
    v = np.concatenate(v_all)
    # final update exactly on the leg end
    s = np.append(s, total)
    dt = np.append(dt, 0.0)
    v = np.append(v, v[-1] if len(v) else scenario.speed_median_kmh)
    x = np.interp(s, cum, line[:, 0])
    y = np.interp(s, cum, line[:, 1])
    return s, np.column_stack([x, y]), dt, v


def _simulate_one(k: int, scenario: SiteScenario, g, loads, dumps, inner_edges, node_pos, task_of):
    rng = np.random.default_rng([scenario.seed, k])
    noise = scenario.noise
    a = loads[int(rng.integers(len(loads)))]
    d = dumps[int(rng.integers(len(dumps)))]
    b = loads[int(rng.integers(len(loads)))]
    leg1 = _path_polyline(scenario.ground_truth, _leg(g, a, d, rng, scenario, inner_edges))
    leg2 = _path_polyline(scenario.ground_truth, _leg(g, d, b, rng, scenario, inner_edges))

    t0 = scenario.start_time + 3600.0 * k + float(rng.uniform(0, 600))
    rows_t, rows_xy, rows_v, moving = [], [], [], []

    def park(node, t):
        n = int(rng.integers(scenario.dwell_updates[0], scenario.dwell_updates[1] + 1))
        spot = np.asarray(node_pos[node]) + rng.normal(0, noise.park_sigma, 2)
        for _ in range(n):
            rows_t.append(t)
            rows_xy.append(spot + rng.normal(0, noise.jitter_sigma, 2))
            rows_v.append(0.0)
            moving.append(False)
            t += float(max(scenario.cadence_median_s * math.exp(scenario.cadence_sigma * rng.standard_normal()),
                           scenario.min_timestep_s))
        return t, n

    t, n_load = park(a, t0)
    load_row = len(rows_t) - 1
    arc_offset = 0.0
    arcs = []
    for leg_no, line in enumerate((leg1, leg2)):
        s, xy, dt, v = _sample_leg(line, rng, scenario)
        times = t + np.concatenate([[0.0], np.cumsum(dt[:-1])])
        # the first point repeats the parking spot's road position; skip it after a stop
        rows_t.extend(times[1:])
        rows_xy.extend(xy[1:])
        rows_v.extend(v[1:])
        moving.extend([True] * (len(s) - 1))
        arcs.extend(arc_offset + s[1:])
        arc_offset += s[-1]
        t = float(times[-1]) + scenario.min_timestep_s
        if leg_no == 0:
            start = len(rows_t)
            t, n_park = park(d, t)
            drop_row = start + n_park // 2
    total_arc = arc_offset

    T = np.array(rows_t)
    XY = np.array(rows_xy)
    V = np.array(rows_v)
    mov = np.array(moving)
    arc = np.full(len(T), np.nan)
    arc[mov] = arcs

    true_xy = XY.copy()
    jitter = rng.normal(0.0, noise.jitter_sigma, XY.shape)
    XY[mov] += jitter[mov]
    if noise.endpoint_noise > 0:
        near_end = mov & ((arc < noise.endpoint_zone) | (arc > total_arc - noise.endpoint_zone))
        XY[near_end] += rng.normal(0.0, noise.endpoint_noise, (int(near_end.sum()), 2))

    keep = np.ones(len(T), dtype=bool)
    if noise.dropout_prob > 0:
        keep &= ~(mov & (rng.random(len(T)) < noise.dropout_prob))
    for tunnel in noise.tunnels:
        if rng.random() < tunnel.prob:
            inside = np.hypot(true_xy[:, 0] - tunnel.x, true_xy[:, 1] - tunnel.y) <= tunnel.radius
            keep &= ~(mov & inside)
    keep[[load_row, drop_row]] = True

    lat, lon = to_geo_array(XY[:, 0], XY[:, 1], scenario.origin)
    lat, lon = np.round(lat, 8), np.round(lon, 8)
    if noise.invalid_fix_prob > 0:
        bad = mov & (rng.random(len(T)) < noise.invalid_fix_prob)
        lat[bad] = 0.0
        lon[bad] = 0.0
    T = np.round(T, 3)
    V = np.round(V, 3)

    load_ev = Event(float(T[load_row]), float(lat[load_row]), float(lon[load_row]))
    drop_ev = Event(float(T[drop_row]), float(lat[drop_row]), float(lon[drop_row]))
    sel = np.flatnonzero(keep)
    task, exc = task_of[a]
    return Trip(
        trip_id=f"trip{k:05d}",
        t=T[sel],
        lat=lat[sel],
        lon=lon[sel],
        speed=V[sel],
        heading=np.full(len(sel), np.nan),
        machine_id=f"truck{int(rng.integers(20)):02d}",
        driver_id=f"driver{int(rng.integers(30)):02d}",
        task_id=task,
        excavator_id=exc,
        load_event=load_ev,
        dropoff_event=drop_ev,
    )


def simulate_trips(scenario: SiteScenario) -> list[Trip]:
    """Drive ``scenario.n_trips`` load -> dump -> load cycles over the ground truth.

    Each trip parks at its load node (zero-speed updates carrying the load
    event), drives to a drop-off node, parks again (drop-off event) and drives
    to a load node, where it ends. Trip ``k`` draws from its own stream seeded
    by ``(seed, k)``.
    """
    graph = scenario.ground_truth
    if graph.check():
        raise ValueError("ground truth graph is invalid: " + "; ".join(graph.check()))
    g = _road_network(graph)
    loads = sorted(n.node_id for n in graph.nodes if n.kind == "load")
    dumps = sorted(n.node_id for n in graph.nodes if n.kind == "dropoff")
    if scenario.n_trips and (not loads or not dumps):
        raise ValueError("the site needs at least one load and one drop-off node")
    for a in loads:
        for d in dumps:
            if not nx.has_path(g, a, d):
                raise ValueError(f"load {a} and drop-off {d} are not connected")
    kinds = {n.node_id: n.kind for n in graph.nodes}
    inner = sorted((min(u, v), max(u, v)) for u, v in g.edges
                   if kinds[u] == "intersection" and kinds[v] == "intersection")
    node_pos = {n.node_id: n.position for n in graph.nodes}
    task_of = {a: (f"task{i}", f"exc{i}") for i, a in enumerate(loads)}
    return [_simulate_one(k, scenario, g, loads, dumps, inner, node_pos, task_of)
            for k in range(scenario.n_trips)]


def intersection_positions(graph: RoadGraph) -> np.ndarray:
    return np.array([n.position for n in graph.nodes if n.kind == "intersection"],
                    dtype=float).reshape(-1, 2)
