"""Intersection candidates from the dissimilarity field, validated by counting outgoing roads."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .cluster import NOISE, SpatialIndex, dbscan, group_by_distance, group_centroids
from .heading_grid import DissimilarityField, HeadingGrid


@dataclass(frozen=True)
class CandidateParams:
    delta_phi_thr: float = 1.4
    delta_phi_thr_unit: str = "rad"
    d_nbr: float = 20.0
    d_int_clust: float = 15.0

    def __post_init__(self):
        if self.delta_phi_thr_unit not in ("rad", "deg"):
            raise ValueError("delta_phi_thr_unit must be 'rad' or 'deg'")
        for name in ("delta_phi_thr", "d_nbr", "d_int_clust"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def threshold(self) -> float:
        """Threshold in the field's native (radian) units."""
        if self.delta_phi_thr_unit == "deg":
            return math.radians(self.delta_phi_thr)
        return self.delta_phi_thr


@dataclass(frozen=True)
class ValidationParams:
    radii: tuple = ((30.0, 25.0), (100.0, 25.0))
    eps_passing: float = 12.0
    n_min_passing: int = 5
    d_passing: float = 15.0
    d_ext_clust: float = 20.0
    n_ext_clust: int = 5
    n_max_val: int = 1000

    def __post_init__(self):
        radii = tuple((float(r), float(w)) for r, w in self.radii)
        object.__setattr__(self, "radii", radii)
        if not radii:
            raise ValueError("at least one (R, L) pair is required")
        if any(r <= 0 or w <= 0 for r, w in radii):
            raise ValueError("R and L must be positive")
        for name in ("eps_passing", "d_passing", "d_ext_clust"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("n_min_passing", "n_ext_clust", "n_max_val"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class Intersection:
    x: float
    y: float
    outgoing_roads: int
    validated_at_R: tuple = ()
    lat: float | None = None
    lon: float | None = None

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


class Validation(NamedTuple):
    valid: bool
    road_count: int


def flag_cells(field: DissimilarityField, p: CandidateParams) -> np.ndarray:
    """Mask of cells whose dissimilarity reaches the threshold."""
    return field.values >= p.threshold


def find_candidates(field: DissimilarityField, grid: HeadingGrid, p: CandidateParams) -> np.ndarray:
    """Centroids of groups of flagged cells; lone flagged cells are discarded."""
    flagged = flag_cells(field, p)
    centers = grid.centers()[flagged]
    if len(centers) == 0:
        return np.empty((0, 2))
    labels = group_by_distance(centers, p.d_int_clust)
    centroids, sizes = group_centroids(centers, labels)
    return centroids[sizes > 1]


def validate_candidate(
    c,
    idx: SpatialIndex,
    p: ValidationParams,
    R: float,
    L: float,
    rng: np.random.Generator | None = None,
    debug: dict | None = None,
) -> Validation:
    """Count the roads leaving candidate ``c`` through the annulus ``R <= d <= R + L``.

    Points within ``R + L`` are clustered with DBSCAN; only clusters that come
    within ``d_passing`` of the candidate are kept. Those points falling in the
    annulus are grouped by single linkage at ``d_ext_clust``, and every group
    larger than ``n_ext_clust`` counts as one road. Three roads or more make
    an intersection.
    """
    c = np.asarray(c, dtype=float)
    near = idx.range_query(c, R + L)
    if near.size > p.n_max_val:
        rng = rng if rng is not None else np.random.default_rng(0)
        near = np.sort(rng.choice(near, size=p.n_max_val, replace=False))
    if near.size == 0:
        return Validation(False, 0)
    pts = idx.points[near]
    d = np.sqrt(((pts - c) ** 2).sum(axis=1))

    labels = dbscan(pts, p.eps_passing, p.n_min_passing)
    passing = np.unique(labels[(d <= p.d_passing) & (labels != NOISE)])
    valid = np.isin(labels, passing) & (labels != NOISE)

    ring = valid & (d >= R) & (d <= R + L)
    road_count = 0
    groups = np.full(len(pts), NOISE, dtype=np.intp)
    if ring.any():
        g = group_by_distance(pts[ring], p.d_ext_clust)
        sizes = np.bincount(g)
        road_count = int((sizes > p.n_ext_clust).sum())
        groups[ring] = g
    if debug is not None:
        debug.update(
            n_points=int(near.size),
            n_valid=int(valid.sum()),
            n_annulus=int(ring.sum()),
            group_sizes=[int(s) for s in np.bincount(groups[ring])] if ring.any() else [],
            road_count=road_count,
        )
    return Validation(road_count >= 3, road_count)


def _validate_one(args):
    k, c, idx, p, seed = args
    rng = np.random.default_rng([seed, k])
    accepted, counts, info = [], [], []
    for R, L in p.radii:
        dbg: dict = {"R": R, "L": L}
        res = validate_candidate(c, idx, p, R, L, rng=rng, debug=dbg)
        info.append(dbg)
        if res.valid:
            accepted.append(R)
            counts.append(res.road_count)
    return accepted, counts, info


def validate_all(
    candidates,
    idx: SpatialIndex,
    p: ValidationParams,
    merge_distance: float = 15.0,
    seed: int = 0,
    workers: int = 1,
    debug: list | None = None,
) -> list[Intersection]:
    """Keep candidates accepted at any configured ``(R, L)`` and merge close survivors.

    Each candidate draws its subsampling stream from ``(seed, candidate index)``,
    so results do not depend on ``workers``.
    """
    cands = np.asarray(candidates, dtype=float).reshape(-1, 2)
    jobs = [(k, cands[k], idx, p, seed) for k in range(len(cands))]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_validate_one, jobs))
    else:
        results = [_validate_one(j) for j in jobs]

    kept_pts, kept_roads, kept_r = [], [], []
    for k, (accepted, counts, info) in enumerate(results):
        if debug is not None:
            debug.append({
                "candidate": k,
                "x": float(cands[k, 0]),
                "y": float(cands[k, 1]),
                "accepted": bool(accepted),
                "radii": info,
            })
        if accepted:
            kept_pts.append(cands[k])
            kept_roads.append(max(counts))
            kept_r.append(accepted)
    if not kept_pts:
        return []

    pts = np.array(kept_pts)
    labels = group_by_distance(pts, merge_distance)
    centroids, _ = group_centroids(pts, labels)
    out = []
    for g, (x, y) in enumerate(centroids):
        members = np.flatnonzero(labels == g)
        radii = sorted({r for m in members for r in kept_r[m]})
        out.append(
            Intersection(
                float(x),
                float(y),
                int(max(kept_roads[m] for m in members)),
                tuple(radii),
            )
        )
    return out
