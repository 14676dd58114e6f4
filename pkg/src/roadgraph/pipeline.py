"""End-to-end road graph inference from raw trips."""

from __future__ import annotations

import dataclasses
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .action_nodes import action_nodes
from .cluster import SpatialIndex
from .config import Config
from .geo import GeoCoord, to_geo_array
from .heading_grid import DissimilarityField, HeadingGrid, build_grid, dissimilarity
from .intersections import Intersection, find_candidates, validate_all
from .roads import RoadGraph, build_graph
from .trips import Trip, TripRejected, preprocess_trip, project_trips

log = logging.getLogger(__name__)


class NoTripsError(ValueError):
    """No trip survived preprocessing."""


@dataclass
class RunResult:
    graph: RoadGraph
    origin: GeoCoord
    trips: list[Trip]
    grid: HeadingGrid
    field: DissimilarityField
    candidates: np.ndarray
    intersections: list[Intersection]
    validation_debug: list = field(default_factory=list)
    report: dict = field(default_factory=dict)


def _preprocess_one(args):
    trip, p = args
    try:
        return preprocess_trip(trip, p), None
    except TripRejected as exc:
        return [], exc.reason


def _map(fn, items, workers):
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def infer(raw_trips: list[Trip], cfg: Config | None = None, workers: int | None = None) -> RunResult:
    """Preprocess, detect intersections, place action nodes and infer edges.

    Results do not depend on ``workers``: every parallel stage is a pure map
    whose outputs are gathered in input order.
    """
    cfg = cfg or Config()
    workers = cfg.effective_workers if workers is None else max(1, workers)
    timings = {}
    clock = time.perf_counter()

    def lap(name):
        nonlocal clock
        now = time.perf_counter()
        timings[name] = round(now - clock, 4)
        clock = now

    if not raw_trips:
        raise NoTripsError("input holds no trips")
    projected, origin = project_trips(raw_trips)
    results = _map(_preprocess_one, [(t, cfg.preprocess) for t in projected], workers)
    trips = [piece for pieces, _ in results for piece in pieces]
    rejected = {}
    for _, reason in results:
        if reason:
            rejected[reason] = rejected.get(reason, 0) + 1
    if not trips:
        raise NoTripsError("no trip survived preprocessing")
    lap("preprocess")

    grid = build_grid(trips, cfg.grid.n_res, fold=cfg.grid.heading_fold,
                      min_count=cfg.grid.min_cell_count)
    dphi = dissimilarity(grid, cfg.candidates.d_nbr)
    lap("heading_grid")

    candidates = find_candidates(dphi, grid, cfg.candidates)
    lap("candidates")

    index = SpatialIndex(np.concatenate([t.xy for t in trips]))
    debug: list = []
    intersections = validate_all(candidates, index, cfg.validation,
                                 merge_distance=cfg.candidates.d_int_clust,
                                 seed=cfg.seed, workers=workers, debug=debug)
    lap("validation")

    actions = action_nodes(projected, cfg.action, origin)
    lap("action_nodes")

    roads = dataclasses.replace(cfg.roads, interp_spacing=cfg.preprocess.interp_spacing, seed=cfg.seed)
    graph = build_graph(trips, intersections, actions, roads, origin=origin, workers=workers)
    lap("roads")

    for it in intersections:
        lat, lon = to_geo_array(it.x, it.y, origin)
        it.lat, it.lon = float(lat), float(lon)
    kinds = [n.kind for n in graph.nodes]
    report = {
        "input_trips": len(raw_trips),
        "rejected_trips": dict(sorted(rejected.items())),
        "preprocessed_trips": len(trips),
        "interpolated_points": int(index.size),
        "grid_cells": len(grid),
        "candidates": int(len(candidates)),
        "intersections": len(intersections),
        "load_nodes": kinds.count("load"),
        "dropoff_nodes": kinds.count("dropoff"),
        "edges": len(graph.edges),
        "dead_end_edges": sum(e.v is None for e in graph.edges),
        "origin": {"lat": origin.lat, "lon": origin.lon},
        "timings_s": timings,
    }
    log.info("inferred %d nodes and %d edges", len(graph.nodes), len(graph.edges))
    return RunResult(graph, origin, trips, grid, dphi, candidates, intersections, debug, report)
