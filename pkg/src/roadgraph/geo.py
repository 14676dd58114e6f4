"""Geographic <-> local metric conversion and heading arithmetic.

The local frame is built from two independent haversine distances, one per
axis, measured from a fixed origin (the component-wise minimum of the data's
latitudes and longitudes). ``x`` grows eastward and ``y`` northward, both in
meters. Headings are measured counterclockwise from the ``+x`` (east) axis.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

EARTH_RADIUS_M = 6_371_000.0
TWO_PI = 2.0 * math.pi


class GeoCoord(NamedTuple):
    lat: float
    lon: float


class LocalCoord(NamedTuple):
    x: float
    y: float


class DegenerateStepError(ValueError):
    """Raised when a heading is requested between two coincident points."""


def haversine(lat1, lon1, lat2, lon2):
    """Great-circle distance in meters; accepts scalars or numpy arrays (degrees)."""
    phi1 = np.radians(lat1)
    phi2 = np.radians(lat2)
    dphi = phi2 - phi1
    dlmb = np.radians(np.subtract(lon2, lon1))
    a = np.sin(dphi / 2.0) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlmb / 2.0) ** 2
    # 1 - a as a sum of squares: no cancellation near antipodal points
    b = (np.cos(dphi / 2.0) * np.cos(dlmb / 2.0)) ** 2 + (np.sin((phi1 + phi2) / 2.0) * np.sin(dlmb / 2.0)) ** 2
    c = 2.0 * np.arctan2(np.sqrt(np.clip(a, 0.0, 1.0)), np.sqrt(np.clip(b, 0.0, 1.0)))
    return EARTH_RADIUS_M * c


def haversine_distance(a: GeoCoord, b: GeoCoord) -> float:
    """Haversine distance in meters between two ``GeoCoord`` values."""
    return float(haversine(a.lat, a.lon, b.lat, b.lon))


def to_local_array(lat, lon, origin: GeoCoord) -> tuple[np.ndarray, np.ndarray]:
    """Project arrays of latitude/longitude into the local frame of ``origin``.

    ``x`` is the haversine distance from the origin to ``(origin.lat, lon)``
    and ``y`` the distance to ``(lat, origin.lon)``, each signed by the
    corresponding coordinate difference.
    """
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    x = np.sign(lon - origin.lon) * haversine(origin.lat, origin.lon, origin.lat, lon)
    y = np.sign(lat - origin.lat) * haversine(origin.lat, origin.lon, lat, origin.lon)
    return x, y


def to_geo_array(x, y, origin: GeoCoord) -> tuple[np.ndarray, np.ndarray]:
    """Exact inverse of :func:`to_local_array`."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lat = origin.lat + np.degrees(y / EARTH_RADIUS_M)
    # along the origin parallel: d = 2R asin(cos(phi0) |sin(dlon/2)|)
    s = np.sin(np.abs(x) / (2.0 * EARTH_RADIUS_M)) / math.cos(math.radians(origin.lat))
    dlon = 2.0 * np.arcsin(np.clip(s, 0.0, 1.0))
    lon = origin.lon + np.sign(x) * np.degrees(dlon)
    return lat, lon


def to_local(p: GeoCoord, origin: GeoCoord) -> LocalCoord:
    x, y = to_local_array(p.lat, p.lon, origin)
    return LocalCoord(float(x), float(y))


def to_geo(p: LocalCoord, origin: GeoCoord) -> GeoCoord:
    lat, lon = to_geo_array(p.x, p.y, origin)
    return GeoCoord(float(lat), float(lon))


def dataset_origin(lat, lon) -> GeoCoord:
    """Component-wise minimum over valid fixes; zero latitude/longitude is ignored."""
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    ok = (lat != 0) & (lon != 0) & np.isfinite(lat) & np.isfinite(lon)
    if not ok.any():
        raise ValueError("no valid coordinates to derive an origin from")
    return GeoCoord(float(lat[ok].min()), float(lon[ok].min()))


def heading_between(a: LocalCoord, b: LocalCoord) -> float:
    """Direction of the step ``a -> b`` in radians, in ``[0, 2*pi)``."""
    dx = b[0] - a[0]
    dy = b[1] - a[1]
    if dx == 0 and dy == 0:
        raise DegenerateStepError(f"coincident points {tuple(a)}")
    phi = math.atan2(dy, dx) % TWO_PI
    # atan2 of a tiny negative dy can round up to exactly 2*pi
    return 0.0 if phi >= TWO_PI else phi


def step_headings(x, y) -> np.ndarray:
    """Headings of consecutive steps of a polyline, ``[0, 2*pi)``; NaN for zero-length steps."""
    dx = np.diff(np.asarray(x, dtype=float))
    dy = np.diff(np.asarray(y, dtype=float))
    phi = np.mod(np.arctan2(dy, dx), TWO_PI)
    phi[phi >= TWO_PI] = 0.0
    phi[(dx == 0) & (dy == 0)] = np.nan
    return phi


def normalize_heading(phi):
    """Fold a heading in ``[0, 2*pi)`` onto ``[0, pi]``.

    Values up to ``pi`` are returned unchanged and larger values map to
    ``2*pi - phi``, so ``phi`` and ``2*pi - phi`` coincide. Works elementwise
    on arrays.
    """
    if np.ndim(phi) == 0:
        phi = float(phi)
        return phi if phi <= math.pi else TWO_PI - phi
    phi = np.asarray(phi, dtype=float)
    return np.where(phi <= math.pi, phi, TWO_PI - phi)


def axial_heading(phi):
    """Map a heading onto ``[0, pi)`` so that opposite travel directions coincide."""
    out = np.mod(phi, math.pi)
    if np.ndim(out) == 0:
        return 0.0 if out >= math.pi else float(out)
    out[out >= math.pi] = 0.0
    return out


def axial_difference(a, b):
    """Smallest difference between two axial headings (period ``pi``), in ``[0, pi/2]``."""
    d = np.abs(np.subtract(a, b)) % math.pi
    return np.minimum(d, math.pi - d)
