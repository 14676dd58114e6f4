"""Load and drop-off nodes from the events reported with each trip."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import trim_mean

from .cluster import NOISE, dbscan, group_by_distance, group_centroids
from .geo import GeoCoord, to_local_array

log = logging.getLogger(__name__)

KINDS = ("load", "dropoff")


@dataclass(frozen=True)
class ActionParams:
    d_load_dump: float = 100.0
    trim_fraction: float = 0.1
    dropoff_eps: float = 15.0
    dropoff_min_samples: int = 5

    def __post_init__(self):
        if not self.d_load_dump > 0:
            raise ValueError("d_load_dump must be positive")
        if not 0 <= self.trim_fraction < 0.5:
            raise ValueError("trim_fraction must lie in [0, 0.5)")
        if not self.dropoff_eps > 0:
            raise ValueError("dropoff_eps must be positive")
        if self.dropoff_min_samples < 1:
            raise ValueError("dropoff_min_samples must be >= 1")


@dataclass
class ActionNode:
    kind: str
    x: float
    y: float
    support: int
    source_ids: tuple = ()
    lat: float | None = None
    lon: float | None = None

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


def _event_xy(trips, attr: str, origin: GeoCoord | None):
    rows, trip_of = [], []
    for trip in trips:
        ev = getattr(trip, attr)
        if ev is None:
            continue
        o = origin if origin is not None else trip.origin
        if o is None:
            raise ValueError(f"trip {trip.trip_id!r} has no projection origin")
        x, y = to_local_array(ev.lat, ev.lon, o)
        rows.append((float(x), float(y)))
        trip_of.append(trip)
    return np.array(rows, dtype=float).reshape(-1, 2), trip_of


def merge_close(nodes: list[ActionNode], distance: float) -> list[ActionNode]:
    """Merge same-kind nodes until every pair is farther apart than ``distance``.

    A merge replaces a single-linkage group by its support-weighted centroid;
    merging can pull centroids together, so this repeats until stable.
    """
    while len(nodes) > 1:
        pts = np.array([n.position for n in nodes])
        labels = group_by_distance(pts, distance)
        k = int(labels.max()) + 1
        if k == len(nodes):
            break
        support = np.array([n.support for n in nodes], dtype=float)
        centroids, _ = group_centroids(pts, labels, weights=support)
        merged = []
        for g in range(k):
            members = [nodes[m] for m in np.flatnonzero(labels == g)]
            sources = tuple(sorted({s for n in members for s in n.source_ids}))
            merged.append(ActionNode(
                members[0].kind,
                float(centroids[g, 0]),
                float(centroids[g, 1]),
                int(sum(n.support for n in members)),
                sources,
            ))
        nodes = merged
    return _canonical(nodes)


def _canonical(nodes):
    return sorted(nodes, key=lambda n: (n.x, n.y, n.support))


def load_nodes(trips, p: ActionParams | None = None, origin: GeoCoord | None = None) -> list[ActionNode]:
    """One node per (excavator, task) group at the trimmed mean of its load events."""
    p = p or ActionParams()
    xy, owners = _event_xy(trips, "load_event", origin)
    if len(xy) == 0:
        return []
    if any(t.excavator_id in (None, "") for t in owners):
        log.warning("load events without excavator_id: grouping by task_id only")
        keys = [("", t.task_id or "") for t in owners]
    else:
        keys = [(t.excavator_id, t.task_id or "") for t in owners]

    nodes = []
    for key in sorted(set(keys)):
        sel = np.array([k == key for k in keys])
        pts = xy[sel]
        # sort so the float summation order ignores input order
        pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
        cx = float(trim_mean(pts[:, 0], p.trim_fraction))
        cy = float(trim_mean(pts[:, 1], p.trim_fraction))
        label = "/".join(part for part in key if part) or "unknown"
        nodes.append(ActionNode("load", cx, cy, int(sel.sum()), (label,)))
    return merge_close(_canonical(nodes), p.d_load_dump)


def dropoff_nodes(trips, p: ActionParams | None = None, origin: GeoCoord | None = None) -> list[ActionNode]:
    """Cluster drop-off events with DBSCAN and place one node at each cluster mean."""
    p = p or ActionParams()
    xy, _ = _event_xy(trips, "dropoff_event", origin)
    if len(xy) == 0:
        return []
    # a canonical order keeps border-point assignment independent of input order
    xy = xy[np.lexsort((xy[:, 1], xy[:, 0]))]
    labels = dbscan(xy, p.dropoff_eps, p.dropoff_min_samples)
    if (labels == NOISE).all():
        return []
    centroids, sizes = group_centroids(xy, labels)
    nodes = [
        ActionNode("dropoff", float(cx), float(cy), int(n), (f"cluster{g}",))
        for g, ((cx, cy), n) in enumerate(zip(centroids, sizes))
    ]
    return merge_close(_canonical(nodes), p.d_load_dump)


def action_nodes(trips, p: ActionParams | None = None, origin: GeoCoord | None = None) -> list[ActionNode]:
    return load_nodes(trips, p, origin) + dropoff_nodes(trips, p, origin)
