"""2D histogram of median travel directions and the directional-dissimilarity field.

Two heading folds are available:

``"axial"`` (default)
    ``phi mod pi``: a road driven in both directions yields one value. The
    per-cell median is taken on the circle of circumference ``pi`` (cut at
    the widest gap between samples), and differences wrap, so ``0`` and
    ``pi`` are the same direction.
``"reflect"``
    ``phi`` for ``phi <= pi`` and ``2*pi - phi`` otherwise
    (:func:`roadgraph.geo.normalize_heading`), with a plain scalar median and
    plain differences. Opposite directions only coincide for roads parallel to
    the ``y`` axis; on any other road, two-way traffic splits the cell medians.

When a cell's samples do not straddle the ``0``/``pi`` seam both folds use
the same ordinary median.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .geo import LocalCoord, axial_difference, axial_heading, normalize_heading, step_headings

FOLDS = ("axial", "reflect")


@dataclass(frozen=True)
class GridParams:
    n_res: float = 5.0
    heading_fold: str = "axial"
    min_cell_count: int = 5

    def __post_init__(self):
        if not self.n_res > 0:
            raise ValueError("n_res must be positive")
        if self.min_cell_count < 1:
            raise ValueError("min_cell_count must be >= 1")
        if self.heading_fold not in FOLDS:
            raise ValueError(f"heading_fold must be one of {FOLDS}")


@dataclass
class HeadingGrid:
    """Sparse grid of per-cell median headings.

    ``ij`` holds integer cell indices (``i`` along ``x``, ``j`` along ``y``)
    of the populated cells in lexicographic order; ``median`` and ``count``
    are aligned with it. Cell ``(i, j)`` spans
    ``origin + [i, i+1) * n_res`` by ``origin + [j, j+1) * n_res``.
    """

    origin: LocalCoord
    n_res: float
    ij: np.ndarray
    median: np.ndarray
    count: np.ndarray
    fold: str = "axial"

    def __len__(self) -> int:
        return len(self.ij)

    def centers(self) -> np.ndarray:
        return np.asarray(self.origin) + (self.ij + 0.5) * self.n_res

    @property
    def cells(self) -> dict:
        return {
            (int(i), int(j)): {"median_phi": float(m), "count": int(c)}
            for (i, j), m, c in zip(self.ij, self.median, self.count)
        }

    def difference(self, a, b):
        if self.fold == "axial":
            return axial_difference(a, b)
        return np.abs(np.subtract(a, b))


@dataclass
class DissimilarityField:
    """Dissimilarity value per populated grid cell (aligned with ``HeadingGrid.ij``)."""

    ij: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.ij)

    @property
    def cells(self) -> dict:
        return {(int(i), int(j)): float(v) for (i, j), v in zip(self.ij, self.values)}


def _polylines(trips):
    for t in trips:
        if hasattr(t, "xy"):
            yield t.xy
        else:
            yield np.asarray(t, dtype=float).reshape(-1, 2)


def segment_medians(values, starts, counts, period: float | None = None) -> np.ndarray:
    """Median of each contiguous run of ``values``; every run must be sorted.

    With ``period`` set, each run is treated as points on a circle of that
    circumference and unrolled at its widest gap before taking the median.
    """
    v = np.asarray(values, dtype=float)
    starts = np.asarray(starts, dtype=np.intp)
    n = np.asarray(counts, dtype=np.intp)
    if len(starts) == 0:
        return np.empty(0)
    if period is None:
        rot = np.zeros_like(n)
    else:
        ends = starts + n - 1
        gap = np.empty_like(v)
        gap[:-1] = v[1:] - v[:-1]
        gap[ends] = v[starts] + period - v[ends]
        seg = np.repeat(np.arange(len(starts)), n)
        widest = np.maximum.reduceat(gap, starts)
        hits = np.flatnonzero(gap == widest[seg])
        _, first = np.unique(seg[hits], return_index=True)
        rot = (hits[first] - starts + 1) % n

    def kth(k):
        pos = rot + k
        wrapped = pos >= n
        out = v[starts + pos % n]
        if period is not None:
            out = out + np.where(wrapped, period, 0.0)
        return out

    odd = n % 2 == 1
    lo = kth((n - 1) // 2)
    hi = kth(n // 2)
    med = np.where(odd, lo, 0.5 * (lo + hi))
    if period is not None:
        med = np.mod(med, period)
        med[med >= period] = 0.0
    return med


def build_grid(trips, n_res: float = 5.0, origin=None, fold: str = "axial",
               min_count: int = 1) -> HeadingGrid:
    """Bin every step's folded heading into the cell holding the step's start point.

    ``trips`` may be :class:`~roadgraph.trips.Trip` objects or ``(n, 2)``
    arrays of local coordinates. Zero-length steps contribute nothing. Without
    an explicit ``origin`` the grid is anchored at the lattice point
    (a multiple of ``n_res``) just below the data. Cells with fewer than
    ``min_count`` samples are left out, as if empty.
    """
    if not n_res > 0:
        raise ValueError("n_res must be positive")
    if fold not in FOLDS:
        raise ValueError(f"unknown fold {fold!r}")
    starts, phis = [], []
    for xy in _polylines(trips):
        if len(xy) < 2:
            continue
        phi = step_headings(xy[:, 0], xy[:, 1])
        ok = np.isfinite(phi)
        starts.append(xy[:-1][ok])
        phis.append(phi[ok])
    if not starts or sum(len(s) for s in starts) == 0:
        o = LocalCoord(0.0, 0.0) if origin is None else LocalCoord(*origin)
        return HeadingGrid(o, n_res, np.empty((0, 2), dtype=np.int64), np.empty(0),
                           np.empty(0, dtype=np.int64), fold)
    pts = np.concatenate(starts)
    phi = np.concatenate(phis)
    if origin is None:
        origin = np.floor(pts.min(axis=0) / n_res) * n_res
    origin = LocalCoord(float(origin[0]), float(origin[1]))
    ij = np.floor((pts - np.asarray(origin)) / n_res).astype(np.int64)
    if (ij < 0).any():
        raise ValueError("points lie below the grid origin")

    values = axial_heading(phi) if fold == "axial" else normalize_heading(phi)
    width = int(ij[:, 1].max()) + 1
    keys = ij[:, 0] * width + ij[:, 1]
    order = np.lexsort((values, keys))
    keys, values = keys[order], values[order]
    ukeys, first, counts = np.unique(keys, return_index=True, return_counts=True)
    med = segment_medians(values, first, counts, math.pi if fold == "axial" else None)
    cell_ij = np.column_stack([ukeys // width, ukeys % width])
    dense = counts >= min_count
    return HeadingGrid(origin, n_res, cell_ij[dense], med[dense], counts[dense], fold)


def neighbor_offsets(n_res: float, d_nbr: float) -> np.ndarray:
    """Cell offsets whose center lies within ``d_nbr`` of the center cell (itself excluded)."""
    r = int(math.floor(d_nbr / n_res + 1e-9))
    di, dj = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij")
    di, dj = di.ravel(), dj.ravel()
    keep = (np.hypot(di, dj) * n_res <= d_nbr * (1 + 1e-12)) & ((di != 0) | (dj != 0))
    return np.column_stack([di[keep], dj[keep]])


def dissimilarity(grid: HeadingGrid, d_nbr: float = 20.0) -> DissimilarityField:
    """Root of the summed squared median differences to populated neighbor cells.

    Only cells holding data count as neighbors; a cell without any gets 0.
    """
    k = len(grid)
    if k == 0:
        return DissimilarityField(grid.ij.copy(), np.empty(0))
    offsets = neighbor_offsets(grid.n_res, d_nbr)
    r = int(np.abs(offsets).max()) if len(offsets) else 0
    width = int(grid.ij[:, 1].max()) + 2 * r + 1
    keys = (grid.ij[:, 0] + r) * width + (grid.ij[:, 1] + r)
    order = np.argsort(keys)
    sorted_keys = keys[order]
    acc = np.zeros(k)
    for di, dj in offsets:
        nk = keys + di * width + dj
        pos = np.searchsorted(sorted_keys, nk)
        pos = np.minimum(pos, k - 1)
        found = sorted_keys[pos] == nk
        if not found.any():
            continue
        other = grid.median[order[pos[found]]]
        acc[found] += grid.difference(grid.median[found], other) ** 2
    return DissimilarityField(grid.ij.copy(), np.sqrt(acc))


def write_grid_csv(grid: HeadingGrid, field: DissimilarityField | None, stream) -> None:
    """Debug table ``i,j,cx,cy,median_phi,count,delta_phi``."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["i", "j", "cx", "cy", "median_phi", "count", "delta_phi"])
    centers = grid.centers()
    dphi = field.values if field is not None else np.full(len(grid), np.nan)
    for (i, j), (cx, cy), m, c, d in zip(grid.ij, centers, grid.median, grid.count, dphi):
        writer.writerow([int(i), int(j), f"{cx:.3f}", f"{cy:.3f}", f"{m:.6f}", int(c),
                         "" if not np.isfinite(d) else f"{d:.6f}"])


def read_grid_csv(stream) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cell centers plus the median and dissimilarity columns written by :func:`write_grid_csv`."""
    rows = list(csv.DictReader(stream))
    centers = np.array([[float(r["cx"]), float(r["cy"])] for r in rows]).reshape(-1, 2)
    med = np.array([float(r["median_phi"]) for r in rows])
    dphi = np.array([float(r["delta_phi"]) if r["delta_phi"] else np.nan for r in rows])
    return centers, med, dphi
