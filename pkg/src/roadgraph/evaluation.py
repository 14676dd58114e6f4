"""Precision and recall of detected intersections against labeled positions."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geo import GeoCoord, to_local_array

MATCHINGS = ("greedy", "hungarian")


class LabelError(ValueError):
    """Label file that cannot be read or does not fit the prediction's coordinates."""


@dataclass
class Matching:
    pairs: list  # (predicted index, actual index, distance)
    unmatched_predicted: list
    unmatched_actual: list

    @property
    def tp(self) -> int:
        return len(self.pairs)

    @property
    def fp(self) -> int:
        return len(self.unmatched_predicted)

    @property
    def fn(self) -> int:
        return len(self.unmatched_actual)

    @property
    def precision_undefined(self) -> bool:
        return self.tp + self.fp == 0

    @property
    def precision(self) -> float:
        return 0.0 if self.precision_undefined else self.tp / (self.tp + self.fp)

    @property
    def recall(self) -> float:
        n = self.tp + self.fn
        return 0.0 if n == 0 else self.tp / n


@dataclass
class PrPoint:
    tolerance: float
    precision: float
    recall: float
    tp: int
    fp: int
    fn: int
    undefined: bool = False


@dataclass
class PrCurve:
    points: list

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(p, name) for p in self.points])


def _pts(a) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    return arr.reshape(-1, 2) if arr.size else np.empty((0, 2))


def _distances(pred: np.ndarray, act: np.ndarray) -> np.ndarray:
    dx = pred[:, None, 0] - act[None, :, 0]
    dy = pred[:, None, 1] - act[None, :, 1]
    return np.sqrt(dx * dx + dy * dy)


def match(predicted, actual, tolerance: float, method: str = "greedy") -> Matching:
    """One-to-one matching of predictions to labels within ``tolerance``.

    ``greedy`` takes pairs nearest first (ties by predicted, then actual
    index). ``hungarian`` maximizes the number of pairs, then minimizes their
    total distance.
    """
    if tolerance < 0:
        raise ValueError("tolerance must be non-negative")
    if method not in MATCHINGS:
        raise ValueError(f"method must be one of {MATCHINGS}")
    pred, act = _pts(predicted), _pts(actual)
    d = _distances(pred, act)
    pairs = []
    if d.size:
        if method == "greedy":
            pi, ai = np.nonzero(d <= tolerance)
            order = np.lexsort((ai, pi, d[pi, ai]))
            used_p, used_a = set(), set()
            for k in order:
                i, j = int(pi[k]), int(ai[k])
                if i in used_p or j in used_a:
                    continue
                used_p.add(i)
                used_a.add(j)
                pairs.append((i, j, float(d[i, j])))
        else:
            ok = d <= tolerance
            big = d.max() * len(pred) * len(act) + 1.0
            cost = np.where(ok, d, big)
            rows, cols = linear_sum_assignment(cost)
            pairs = [(int(i), int(j), float(d[i, j])) for i, j in zip(rows, cols) if ok[i, j]]
            pairs.sort(key=lambda t: (t[2], t[0], t[1]))
    mp = {i for i, _, _ in pairs}
    ma = {j for _, j, _ in pairs}
    return Matching(
        pairs,
        [i for i in range(len(pred)) if i not in mp],
        [j for j in range(len(act)) if j not in ma],
    )


def pr_curve(predicted, actual, tolerances, method: str = "greedy") -> PrCurve:
    tol = [float(t) for t in tolerances]
    if any(b <= a for a, b in zip(tol, tol[1:])):
        raise ValueError("tolerances must be strictly increasing")
    points = []
    for t in tol:
        m = match(predicted, actual, t, method)
        points.append(PrPoint(t, m.precision, m.recall, m.tp, m.fp, m.fn, m.precision_undefined))
    return PrCurve(points)


def write_pr_csv(curve: PrCurve, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["tolerance_m", "precision", "recall", "tp", "fp", "fn"])
    for p in curve.points:
        w.writerow([f"{p.tolerance:g}", f"{p.precision:.6f}", f"{p.recall:.6f}", p.tp, p.fp, p.fn])


def read_labels(stream, origin: GeoCoord | None = None) -> tuple[np.ndarray, str]:
    """Label positions in local meters, plus the column kind found (``xy`` or ``latlon``).

    ``lat,lon`` labels need ``origin`` to be projected.
    """
    reader = csv.DictReader(stream)
    cols = set(reader.fieldnames or [])
    if {"x", "y"} <= cols:
        kind, a, b = "xy", "x", "y"
    elif {"lat", "lon"} <= cols:
        kind, a, b = "latlon", "lat", "lon"
    else:
        raise LabelError("label file needs columns x,y or lat,lon")
    rows = []
    for line, row in enumerate(reader, start=2):
        try:
            rows.append((float(row[a]), float(row[b])))
        except (TypeError, ValueError):
            raise LabelError(f"line {line}: bad coordinate") from None
    arr = np.array(rows, dtype=float).reshape(-1, 2)
    if kind == "latlon":
        if origin is None:
            raise LabelError("lat,lon labels need a geographic reference")
        x, y = to_local_array(arr[:, 0], arr[:, 1], origin)
        arr = np.column_stack([x, y]).reshape(-1, 2)
    return arr, kind


def write_labels(points, stream, origin: GeoCoord | None = None) -> None:
    """Write ``lat,lon`` labels when ``origin`` is given, else ``x,y``."""
    from .geo import to_geo_array

    pts = _pts(points)
    w = csv.writer(stream, lineterminator="\n")
    if origin is None:
        w.writerow(["x", "y"])
        for x, y in pts:
            w.writerow([f"{x:.3f}", f"{y:.3f}"])
    else:
        lat, lon = to_geo_array(pts[:, 0], pts[:, 1], origin)
        w.writerow(["lat", "lon"])
        for la, lo in zip(np.atleast_1d(lat), np.atleast_1d(lon)):
            w.writerow([f"{la:.8f}", f"{lo:.8f}"])


def inside_polygon(points, polygon) -> np.ndarray:
    """Even-odd ray casting; points on an edge may fall either way."""
    pts = _pts(points)
    poly = _pts(polygon)
    inside = np.zeros(len(pts), dtype=bool)
    if len(poly) < 3:
        return inside
    x, y = pts[:, 0], pts[:, 1]
    for (x1, y1), (x2, y2) in zip(poly, np.roll(poly, -1, axis=0)):
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < xint)
    return inside
