"""Graph serialization: GeoJSON (read and write), Graphviz DOT and CSV tables."""

from __future__ import annotations

import csv
import io
import json

import numpy as np

from .geo import GeoCoord, to_geo_array, to_local_array
from .roads import Edge, Node, RoadGraph

FORMATS = ("geojson", "dot", "csv")


def _r(v: float, digits: int) -> float:
    # avoid "-0.0" in the output
    return round(float(v), digits) + 0.0


def _lonlat(x, y, origin: GeoCoord | None) -> list:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if origin is None:
        return [[_r(a, 3), _r(b, 3)] for a, b in zip(x, y)]
    lat, lon = to_geo_array(x, y, origin)
    return [[_r(b, 8), _r(a, 8)] for a, b in zip(np.atleast_1d(lat), np.atleast_1d(lon))]


def to_geojson(graph: RoadGraph) -> dict:
    """FeatureCollection with node Points and edge LineStrings.

    Coordinates are ``[lon, lat]`` when the graph has a geographic origin
    (stored in the top-level ``origin`` member), else local meters.
    """
    origin = graph.origin
    features = []
    for n in graph.nodes:
        features.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": _lonlat(n.x, n.y, origin)[0]},
            "properties": {
                "feature": "node",
                "node_id": n.node_id,
                "kind": n.kind,
                "x": _r(n.x, 3),
                "y": _r(n.y, 3),
                "support": int(n.support),
            },
        })
    for e in graph.edges:
        line = np.asarray(e.polyline)
        features.append({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": _lonlat(line[:, 0], line[:, 1], origin)},
            "properties": {
                "feature": "edge",
                "edge_id": e.edge_id,
                "u": e.u,
                "v": e.v,
                "support": int(e.support),
                "trip_id": e.trip_id,
            },
        })
    out = {"type": "FeatureCollection", "features": features}
    out["origin"] = None if origin is None else {"lat": origin.lat, "lon": origin.lon}
    return out


def dumps_geojson(graph: RoadGraph) -> str:
    return json.dumps(to_geojson(graph), indent=1, sort_keys=True) + "\n"


def from_geojson(doc) -> RoadGraph:
    """Rebuild a graph written by :func:`to_geojson` (a dict or JSON text)."""
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    if doc.get("type") != "FeatureCollection":
        raise ValueError("not a FeatureCollection")
    o = doc.get("origin")
    origin = None if o is None else GeoCoord(float(o["lat"]), float(o["lon"]))
    nodes, edges = [], []
    for f in doc.get("features", []):
        props = f.get("properties") or {}
        geom = f.get("geometry") or {}
        coords = np.asarray(geom.get("coordinates"), dtype=float)
        if props.get("feature") == "node" or geom.get("type") == "Point":
            nodes.append(Node(int(props["node_id"]), props["kind"], float(props["x"]),
                              float(props["y"]), support=int(props.get("support", 0))))
        elif geom.get("type") == "LineString":
            coords = coords.reshape(-1, 2)
            if origin is None:
                line = coords.copy()
            else:
                x, y = to_local_array(coords[:, 1], coords[:, 0], origin)
                line = np.column_stack([x, y])
            v = props.get("v")
            edges.append(Edge(int(props["edge_id"]), int(props["u"]), None if v is None else int(v),
                              line, int(props.get("support", 0)), str(props.get("trip_id", ""))))
    graph = RoadGraph(sorted(nodes, key=lambda n: n.node_id), sorted(edges, key=lambda e: e.edge_id))
    if origin is not None:
        graph.with_geo(origin)
    return graph


def read_geojson(path) -> RoadGraph:
    with open(path, encoding="utf-8") as fh:
        return from_geojson(json.load(fh))


def dumps_dot(graph: RoadGraph) -> str:
    out = io.StringIO()
    out.write("graph roads {\n")
    for n in graph.nodes:
        out.write(f'  n{n.node_id} [kind="{n.kind}", x={n.x:.3f}, y={n.y:.3f}, support={n.support}];\n')
    for e in graph.edges:
        if e.v is None:
            out.write(f'  open{e.edge_id} [kind="open", shape=point];\n')
            target = f"open{e.edge_id}"
        else:
            target = f"n{e.v}"
        out.write(f"  n{e.u} -- {target} [edge_id={e.edge_id}, support={e.support}, "
                  f"points={len(e.polyline)}];\n")
    out.write("}\n")
    return out.getvalue()


def dumps_csv(graph: RoadGraph) -> tuple[str, str]:
    """Node table and edge table; edge polylines are ``x y`` pairs joined by ``;``."""
    nodes = io.StringIO()
    w = csv.writer(nodes, lineterminator="\n")
    w.writerow(["node_id", "kind", "x", "y", "lat", "lon", "support"])
    for n in graph.nodes:
        lat = "" if n.lat is None else f"{n.lat:.8f}"
        lon = "" if n.lon is None else f"{n.lon:.8f}"
        w.writerow([n.node_id, n.kind, f"{n.x:.3f}", f"{n.y:.3f}", lat, lon, n.support])
    edges = io.StringIO()
    w = csv.writer(edges, lineterminator="\n")
    w.writerow(["edge_id", "u", "v", "support", "trip_id", "length_m", "points"])
    for e in graph.edges:
        line = np.asarray(e.polyline)
        length = float(np.sqrt((np.diff(line, axis=0) ** 2).sum(axis=1)).sum())
        pts = ";".join(f"{x:.3f} {y:.3f}" for x, y in line)
        w.writerow([e.edge_id, e.u, "" if e.v is None else e.v, e.support, e.trip_id,
                    f"{length:.3f}", pts])
    return nodes.getvalue(), edges.getvalue()


def render(graph: RoadGraph, fmt: str) -> dict[str, str]:
    """File suffix -> text for one export format."""
    if fmt == "geojson":
        return {".geojson": dumps_geojson(graph)}
    if fmt == "dot":
        return {".dot": dumps_dot(graph)}
    if fmt == "csv":
        nodes, edges = dumps_csv(graph)
        return {"_nodes.csv": nodes, "_edges.csv": edges}
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
