"""Spatial index, DBSCAN and single-linkage grouping on 2D local coordinates.

All distances are Euclidean and computed as ``sqrt(dx*dx + dy*dy)``; every
membership test in this module is closed (``<=``).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial import cKDTree

NOISE = -1

# brute-force pair checks below this many distance evaluations
_BRUTE_PAIRS = 4096


def as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return np.empty((0, 2))
    return pts.reshape(-1, 2)


def _dist_to(pts: np.ndarray, c) -> np.ndarray:
    dx = pts[:, 0] - c[0]
    dy = pts[:, 1] - c[1]
    return np.sqrt(dx * dx + dy * dy)


class SpatialIndex:
    """Immutable k-d tree over 2D points with exact closed-ball range queries."""

    def __init__(self, points):
        self.points = as_points(points)
        self.points.setflags(write=False)
        self._tree = cKDTree(self.points) if len(self.points) else None

    def __len__(self) -> int:
        return len(self.points)

    @property
    def size(self) -> int:
        return len(self.points)

    def range_query(self, center, radius: float) -> np.ndarray:
        """Sorted indices of all points with distance ``<= radius`` from ``center``."""
        if radius < 0:
            raise ValueError("radius must be non-negative")
        if self._tree is None:
            return np.empty(0, dtype=np.intp)
        c = (float(center[0]), float(center[1]))
        pad = radius * 1e-9 + 1e-9
        cand = np.asarray(self._tree.query_ball_point(c, radius + pad), dtype=np.intp)
        if cand.size == 0:
            return cand
        cand.sort()
        return cand[_dist_to(self.points[cand], c) <= radius]

    def count_within(self, centers, radius: float) -> np.ndarray:
        """Number of indexed points within ``radius`` of each center."""
        centers = as_points(centers)
        if self._tree is None or len(centers) == 0:
            return np.zeros(len(centers), dtype=np.intp)
        pad = radius * 1e-9 + 1e-9
        hi = np.asarray(self._tree.query_ball_point(centers, radius + pad, return_length=True))
        lo = np.asarray(
            self._tree.query_ball_point(centers, max(radius - pad, 0.0), return_length=True)
        )
        out = hi.astype(np.intp)
        # only points near the boundary need the exact test
        for k in np.flatnonzero(hi != lo):
            out[k] = self.range_query(centers[k], radius).size
        return out


def build_index(points) -> SpatialIndex:
    return SpatialIndex(points)


def range_query(idx: SpatialIndex, center, radius: float) -> np.ndarray:
    return idx.range_query(center, radius)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = np.arange(n)

    def find(self, a: int) -> int:
        parent = self.parent
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if ra < rb:
                self.parent[rb] = ra
            else:
                self.parent[ra] = rb


def _sets_within(a: np.ndarray, b: np.ndarray, eps: float) -> bool:
    """True if some point of ``a`` lies within ``eps`` of some point of ``b``."""
    if len(a) * len(b) <= _BRUTE_PAIRS:
        dx = a[:, None, 0] - b[None, :, 0]
        dy = a[:, None, 1] - b[None, :, 1]
        return bool((np.sqrt(dx * dx + dy * dy) <= eps).any())
    if len(a) > len(b):
        a, b = b, a
    d, j = cKDTree(b).query(a, k=1, distance_upper_bound=eps * (1 + 1e-9) + 1e-9)
    hit = np.isfinite(d)
    if not hit.any():
        return False
    return bool((_pairwise(a[hit], b[j[hit]]) <= eps).any())


def _pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    dx = a[:, 0] - b[:, 0]
    dy = a[:, 1] - b[:, 1]
    return np.sqrt(dx * dx + dy * dy)


def _components(pts: np.ndarray, eps: float) -> np.ndarray:
    """Connected components of the graph linking points at distance ``<= eps``.

    Points are binned into square cells of side ``eps / sqrt(2)``; everything
    inside a cell is mutually connected, so only cell pairs up to two cells
    apart need an explicit closest-pair check.
    """
    n = len(pts)
    if n == 0:
        return np.empty(0, dtype=np.intp)
    side = eps / math.sqrt(2.0) * (1.0 - 1e-9)
    ij = np.floor((pts - pts.min(axis=0)) / side).astype(np.int64)
    ncol = int(ij[:, 1].max()) + 5
    keys = ij[:, 0] * ncol + ij[:, 1]
    ukeys, cell_of = np.unique(keys, return_inverse=True)
    cell_of = cell_of.ravel()
    order = np.argsort(cell_of, kind="stable")
    bounds = np.searchsorted(cell_of[order], np.arange(len(ukeys) + 1))
    members = [order[bounds[c]:bounds[c + 1]] for c in range(len(ukeys))]
    lookup = {int(k): c for c, k in enumerate(ukeys)}

    uf = _UnionFind(len(ukeys))
    offsets = [(di, dj) for di in range(0, 3) for dj in range(-2, 3) if di > 0 or dj > 0]
    for c, key in enumerate(ukeys):
        ci, cj = divmod(int(key), ncol)
        for di, dj in offsets:
            other = lookup.get((ci + di) * ncol + (cj + dj))
            if other is None or uf.find(c) == uf.find(other):
                continue
            if _sets_within(pts[members[c]], pts[members[other]], eps):
                uf.union(c, other)
    roots = np.array([uf.find(c) for c in range(len(ukeys))])
    return roots[cell_of]


def _first_appearance_rank(comp: np.ndarray) -> np.ndarray:
    """Relabel component ids 0..k-1 in order of first appearance."""
    _, first, inv = np.unique(comp, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.intp)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return rank[inv.ravel()]


def dbscan(points, eps: float, min_samples: int) -> np.ndarray:
    """Density-based clustering.

    Parameters
    ----------
    points : array_like, shape (n, 2)
    eps : float
        Neighborhood radius (closed ball).
    min_samples : int
        A point is a core point when its ``eps``-neighborhood, the point itself
        included, holds at least this many points.

    Returns
    -------
    labels : ndarray of int
        Cluster ids ``0..k-1`` numbered by the first core point (in input
        order) of each cluster, or ``NOISE``. A border point reachable from
        several clusters joins the lowest-numbered one, which is what the
        classic sequential expansion in input order produces.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if min_samples < 1:
        raise ValueError("min_samples must be >= 1")
    pts = as_points(points)
    n = len(pts)
    labels = np.full(n, NOISE, dtype=np.intp)
    if n == 0:
        return labels

    if min_samples == 1:
        core = np.ones(n, dtype=bool)
    else:
        counts = SpatialIndex(pts).count_within(pts, eps)
        core = counts >= min_samples
    core_idx = np.flatnonzero(core)
    if core_idx.size == 0:
        return labels

    core_pts = pts[core_idx]
    labels[core_idx] = _first_appearance_rank(_components(core_pts, eps))

    border = np.flatnonzero(~core)
    if border.size:
        core_index = SpatialIndex(core_pts)
        for b in border:
            near = core_index.range_query(pts[b], eps)
            if near.size:
                labels[b] = labels[core_idx[near]].min()
    return labels


def group_by_distance(points, threshold: float) -> np.ndarray:
    """Single-linkage grouping: transitive closure of ``distance <= threshold``.

    Group ids are numbered by first appearance in input order.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    pts = as_points(points)
    if len(pts) == 0:
        return np.empty(0, dtype=np.intp)
    return _first_appearance_rank(_components(pts, threshold))


def group_centroids(points, labels, weights=None) -> tuple[np.ndarray, np.ndarray]:
    """Centroid and size of every label ``0..k-1`` (``NOISE`` ignored)."""
    pts = as_points(points)
    labels = np.asarray(labels)
    keep = labels >= 0
    k = int(labels[keep].max()) + 1 if keep.any() else 0
    w = np.ones(len(pts)) if weights is None else np.asarray(weights, dtype=float)
    sums = np.zeros((k, 2))
    np.add.at(sums, labels[keep], pts[keep] * w[keep, None])
    wsum = np.zeros(k)
    np.add.at(wsum, labels[keep], w[keep])
    sizes = np.bincount(labels[keep], minlength=k)
    return sums / wsum[:, None], sizes


def merge_by_distance(points, threshold: float) -> np.ndarray:
    """Replace every single-linkage group (at ``threshold``) by its centroid."""
    pts = as_points(points)
    if len(pts) == 0:
        return pts.copy()
    centroids, _ = group_centroids(pts, group_by_distance(pts, threshold))
    return centroids
