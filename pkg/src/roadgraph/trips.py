"""Trip ingestion and preprocessing: parse, project, clean, split, interpolate."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy import interpolate

from .geo import (
    GeoCoord,
    LocalCoord,
    TWO_PI,
    dataset_origin,
    haversine,
    step_headings,
    to_geo_array,
    to_local_array,
)

log = logging.getLogger(__name__)

FIELDS = (
    "trip_id",
    "timestamp",
    "lat",
    "lon",
    "speed_kmh",
    "heading_deg",
    "machine_id",
    "driver_id",
    "task_id",
    "excavator_id",
    "event",
)
REQUIRED = ("trip_id", "timestamp", "lat", "lon", "speed_kmh")
EVENTS = ("", "load", "dropoff")


class ParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class TripRejected(Exception):
    """A trip did not survive cleaning. ``reason`` is ``too_short`` or ``all_invalid``."""

    def __init__(self, trip_id: str, reason: str):
        super().__init__(f"trip {trip_id!r} rejected: {reason}")
        self.trip_id = trip_id
        self.reason = reason


@dataclass(frozen=True)
class Event:
    timestamp: float
    lat: float
    lon: float


@dataclass(frozen=True)
class GpsUpdate:
    timestamp: float
    geo: GeoCoord
    speed: float
    raw_heading: float | None = None
    local: LocalCoord | None = None


@dataclass
class Trip:
    """One truck trip as column arrays (one entry per GPS update).

    ``speed`` is in km/h and ``heading`` holds the raw reported heading in
    degrees (NaN when absent). ``x``/``y`` are filled by :func:`project_trips`.
    ``stationary`` keeps the zero-speed updates removed by cleaning as rows of
    ``(timestamp, lat, lon)``.
    """

    trip_id: str
    t: np.ndarray
    lat: np.ndarray
    lon: np.ndarray
    speed: np.ndarray
    heading: np.ndarray | None = None
    machine_id: str = ""
    driver_id: str = ""
    task_id: str = ""
    excavator_id: str | None = None
    load_event: Event | None = None
    dropoff_event: Event | None = None
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    origin: GeoCoord | None = None
    stationary: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))
    trimmed: bool = False

    def __len__(self) -> int:
        return len(self.t)

    @property
    def xy(self) -> np.ndarray:
        if self.x is None:
            raise ValueError(f"trip {self.trip_id!r} has not been projected")
        return np.column_stack([self.x, self.y])

    @property
    def updates(self) -> list[GpsUpdate]:
        out = []
        for k in range(len(self)):
            raw = None
            if self.heading is not None and np.isfinite(self.heading[k]):
                raw = float(self.heading[k])
            local = None if self.x is None else LocalCoord(float(self.x[k]), float(self.y[k]))
            out.append(
                GpsUpdate(
                    float(self.t[k]),
                    GeoCoord(float(self.lat[k]), float(self.lon[k])),
                    float(self.speed[k]),
                    raw,
                    local,
                )
            )
        return out

    def subset(self, mask_or_index, **changes) -> "Trip":
        """New trip holding only the selected updates (metadata copied)."""
        sel = mask_or_index
        arrays = {}
        for name in ("t", "lat", "lon", "speed", "heading", "x", "y"):
            value = getattr(self, name)
            arrays[name] = None if value is None else value[sel]
        arrays.update(changes)
        return dataclasses.replace(self, **arrays)


@dataclass(frozen=True)
class PreprocessParams:
    d_endpoints: float = 100.0
    d_spline: int = 1
    interp_spacing: float = 5.0
    n_min: int = 10
    t_gap: float = 300.0
    d_gap: float = 2000.0
    phi_gap: float = 0.0  # radians; 0 disables direction splitting

    def __post_init__(self):
        for name in ("d_endpoints", "interp_spacing", "t_gap", "d_gap"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if int(self.d_spline) != self.d_spline or self.d_spline < 1:
            raise ValueError("d_spline must be a positive integer")
        if self.n_min < 2:
            raise ValueError("n_min must be >= 2")
        if self.phi_gap < 0:
            raise ValueError("phi_gap must be non-negative")


# --------------------------------------------------------------------------
# parsing


def parse_timestamp(text: str) -> float:
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def _opt_float(value) -> float:
    if value is None or (isinstance(value, str) and not value.strip()):
        return math.nan
    return float(value)


def _text_stream(stream):
    if isinstance(stream, (bytes, bytearray)):
        return io.StringIO(bytes(stream).decode("utf-8"))
    if isinstance(stream, str):
        return io.StringIO(stream)
    if isinstance(stream, io.TextIOBase):
        return stream
    return io.TextIOWrapper(stream, encoding="utf-8", newline="")


def _csv_rows(stream):
    reader = csv.reader(stream)
    header = None
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        if header is None:
            header = [c.strip().lstrip("﻿") for c in row]
            missing = [c for c in REQUIRED if c not in header]
            if missing:
                raise ParseError(f"header lacks columns {missing}", reader.line_num)
            unknown = [c for c in header if c not in FIELDS]
            if unknown:
                raise ParseError(f"unknown columns {unknown}", reader.line_num)
            continue
        if len(row) != len(header):
            yield reader.line_num, None
            continue
        yield reader.line_num, dict(zip(header, row))


def _jsonl_rows(stream):
    first = True
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            obj = None
        if first:
            # the first record plays the role of a header
            if not isinstance(obj, dict):
                raise ParseError("first record is not a JSON object", line_no)
            missing = [c for c in REQUIRED if c not in obj]
            if missing:
                raise ParseError(f"record lacks fields {missing}", line_no)
            first = False
        yield line_no, obj if isinstance(obj, dict) else None


def parse_updates(stream, fmt: str = "csv", malformed: list | None = None) -> list[Trip]:
    """Read GPS updates and group them into trips sorted by timestamp.

    Malformed rows are skipped; pass a list as ``malformed`` to collect
    ``(line, reason)`` pairs for them. A bad header or an unknown format
    raises :class:`ParseError`.
    """
    if fmt not in ("csv", "jsonl"):
        raise ParseError(f"unknown format {fmt!r}", 0)
    text = _text_stream(stream)
    rows = _csv_rows(text) if fmt == "csv" else _jsonl_rows(text)

    groups: dict[str, list] = {}
    meta: dict[str, dict] = {}
    bad = 0
    for line_no, row in rows:
        try:
            if row is None:
                raise ValueError("wrong number of fields")
            trip_id = str(row["trip_id"]).strip()
            if not trip_id:
                raise ValueError("empty trip_id")
            ts = parse_timestamp(str(row["timestamp"]))
            lat = float(row["lat"])
            lon = float(row["lon"])
            speed = _opt_float(row.get("speed_kmh"))
            heading = _opt_float(row.get("heading_deg"))
            event = str(row.get("event") or "").strip().lower()
            if event not in EVENTS:
                raise ValueError(f"unknown event {event!r}")
            if not (math.isfinite(ts) and -90 <= lat <= 90 and -180 <= lon <= 180):
                raise ValueError("coordinate or timestamp out of range")
            if speed < 0:
                raise ValueError("negative speed")
        except (KeyError, ValueError, TypeError) as exc:
            bad += 1
            if malformed is not None:
                malformed.append((line_no, str(exc)))
            continue
        groups.setdefault(trip_id, []).append((ts, lat, lon, speed, heading, event))
        if trip_id not in meta:
            meta[trip_id] = {
                k: (str(row.get(k) or "").strip())
                for k in ("machine_id", "driver_id", "task_id", "excavator_id")
            }
    if bad:
        log.warning("skipped %d malformed rows", bad)

    trips = []
    for trip_id, recs in groups.items():
        recs.sort(key=lambda r: r[0])
        arr = np.array([r[:5] for r in recs], dtype=float)
        keep = np.concatenate([[True], np.diff(arr[:, 0]) > 0])
        if not keep.all():
            log.warning("trip %s: dropped %d updates with repeated timestamps", trip_id, (~keep).sum())
        load = next((Event(*r[:3]) for r in recs if r[5] == "load"), None)
        drop = next((Event(*r[:3]) for r in recs if r[5] == "dropoff"), None)
        arr = arr[keep]
        m = meta[trip_id]
        trips.append(
            Trip(
                trip_id=trip_id,
                t=arr[:, 0],
                lat=arr[:, 1],
                lon=arr[:, 2],
                speed=arr[:, 3],
                heading=arr[:, 4],
                machine_id=m["machine_id"],
                driver_id=m["driver_id"],
                task_id=m["task_id"],
                excavator_id=m["excavator_id"] or None,
                load_event=load,
                dropoff_event=drop,
            )
        )
    return trips


def read_trips(path, fmt: str | None = None, malformed: list | None = None) -> list[Trip]:
    path = Path(path)
    if fmt is None:
        fmt = "jsonl" if path.suffix.lower() in (".jsonl", ".ndjson") else "csv"
    with open(path, "rb") as fh:
        return parse_updates(fh, fmt, malformed)


def _fmt_num(value: float, digits: int) -> str:
    if value is None or not math.isfinite(value):
        return ""
    return f"{value:.{digits}f}"


def update_records(trip: Trip) -> Iterable[dict]:
    """Rows for one trip in the input schema; events attach to the matching update."""
    for k in range(len(trip)):
        event = ""
        for name, ev in (("load", trip.load_event), ("dropoff", trip.dropoff_event)):
            if ev is not None and ev.timestamp == trip.t[k]:
                event = name
        heading = trip.heading[k] if trip.heading is not None else math.nan
        yield {
            "trip_id": trip.trip_id,
            "timestamp": _fmt_num(trip.t[k], 3),
            "lat": _fmt_num(trip.lat[k], 8),
            "lon": _fmt_num(trip.lon[k], 8),
            "speed_kmh": _fmt_num(trip.speed[k], 3),
            "heading_deg": _fmt_num(heading, 1),
            "machine_id": trip.machine_id,
            "driver_id": trip.driver_id,
            "task_id": trip.task_id,
            "excavator_id": trip.excavator_id or "",
            "event": event,
        }


def write_trips(trips: Iterable[Trip], stream, fmt: str = "csv") -> None:
    """Write trips in the input schema (text stream)."""
    if fmt == "csv":
        writer = csv.DictWriter(stream, fieldnames=FIELDS, lineterminator="\n")
        writer.writeheader()
        for trip in trips:
            writer.writerows(update_records(trip))
    elif fmt == "jsonl":
        for trip in trips:
            for rec in update_records(trip):
                stream.write(json.dumps(rec) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


# --------------------------------------------------------------------------
# projection and cleaning


def project_trips(trips: list[Trip], origin: GeoCoord | None = None) -> tuple[list[Trip], GeoCoord]:
    """Fill local coordinates for all trips using one dataset-wide origin."""
    if origin is None:
        lat = np.concatenate([t.lat for t in trips]) if trips else np.empty(0)
        lon = np.concatenate([t.lon for t in trips]) if trips else np.empty(0)
        origin = dataset_origin(lat, lon)
    out = []
    for trip in trips:
        x, y = to_local_array(trip.lat, trip.lon, origin)
        out.append(dataclasses.replace(trip, x=x, y=y, origin=origin))
    return out, origin


def _step_lengths(trip: Trip) -> np.ndarray:
    return haversine(trip.lat[:-1], trip.lon[:-1], trip.lat[1:], trip.lon[1:])


def clean_trip(trip: Trip, p: PreprocessParams) -> Trip:
    """Drop invalid and irrelevant updates; raise :class:`TripRejected` if too little is left.

    Steps, in order: zero latitude/longitude fixes, zero-speed updates (moved
    to ``trip.stationary``), consecutive duplicate positions, and the final
    ``p.d_endpoints`` meters of driving. Endpoint trimming happens once per
    trip, so cleaning an already cleaned trip changes nothing.
    """
    valid = (trip.lat != 0) & (trip.lon != 0) & np.isfinite(trip.lat) & np.isfinite(trip.lon)
    if not valid.any():
        raise TripRejected(trip.trip_id, "all_invalid")
    out = trip.subset(valid)

    still = out.speed == 0
    if still.any():
        rows = np.column_stack([out.t[still], out.lat[still], out.lon[still]])
        out = out.subset(~still, stationary=np.vstack([trip.stationary, rows]))
    if len(out) == 0:
        raise TripRejected(trip.trip_id, "all_invalid")

    same = (out.lat[1:] == out.lat[:-1]) & (out.lon[1:] == out.lon[:-1])
    if same.any():
        out = out.subset(np.concatenate([[True], ~same]))

    if not out.trimmed:
        steps = _step_lengths(out)
        from_end = np.concatenate([np.cumsum(steps[::-1])[::-1], [0.0]])
        out = out.subset(from_end > p.d_endpoints, trimmed=True)

    if len(out) < p.n_min:
        raise TripRejected(trip.trip_id, "too_short")
    return out


def _turn_angles(trip: Trip) -> np.ndarray:
    """Absolute heading change at each update (0 at the ends)."""
    if trip.x is not None:
        x, y = trip.x, trip.y
    else:
        x, y = to_local_array(trip.lat, trip.lon, GeoCoord(trip.lat[0], trip.lon[0]))
    h = step_headings(x, y)
    d = np.abs(np.diff(h)) % TWO_PI
    d = np.minimum(d, TWO_PI - d)
    return np.concatenate([[0.0], np.nan_to_num(d), [0.0]])


def split_points(trip: Trip, p: PreprocessParams) -> np.ndarray:
    """Indices ``k`` such that the trip is cut between update ``k-1`` and ``k``."""
    if len(trip) < 2:
        return np.empty(0, dtype=np.intp)
    cut = (np.diff(trip.t) > p.t_gap) | (_step_lengths(trip) > p.d_gap)
    if p.phi_gap > 0:
        turns = _turn_angles(trip)
        # a sharp turn at update k separates k from k+1
        cut |= turns[:-1] > p.phi_gap
    return np.flatnonzero(cut) + 1


def split_trip(trip: Trip, p: PreprocessParams) -> list[Trip]:
    """Cut a cleaned trip at idle gaps, jumps and (optionally) sharp turns.

    Pieces shorter than ``p.n_min`` are dropped. When a cut happens, pieces
    get ids ``<trip_id>.<k>``; the load event stays with the first piece and
    the drop-off event with the piece covering its timestamp.
    """
    cuts = split_points(trip, p)
    if cuts.size == 0:
        return [trip] if len(trip) >= p.n_min else []
    bounds = np.concatenate([[0], cuts, [len(trip)]])
    pieces = []
    for k, (a, b) in enumerate(zip(bounds[:-1], bounds[1:])):
        pieces.append(trip.subset(slice(a, b), trip_id=f"{trip.trip_id}.{k}"))
    drop_at = None
    if trip.dropoff_event is not None:
        starts = np.array([pc.t[0] for pc in pieces])
        drop_at = max(int(np.searchsorted(starts, trip.dropoff_event.timestamp, side="right")) - 1, 0)
    out = []
    for k, pc in enumerate(pieces):
        pc = dataclasses.replace(
            pc,
            load_event=trip.load_event if k == 0 else None,
            dropoff_event=trip.dropoff_event if k == drop_at else None,
        )
        if len(pc) >= p.n_min:
            out.append(pc)
    return out


def _arc_targets(length: float, spacing: float) -> np.ndarray:
    targets = np.arange(0.0, length, spacing)
    if length - targets[-1] <= 1e-6 * spacing:
        targets[-1] = length
    else:
        targets = np.append(targets, length)
    return targets


def interpolate_trip(trip: Trip, p: PreprocessParams) -> Trip:
    """Resample a projected trip along its arc length every ``p.interp_spacing`` meters.

    A spline of degree ``p.d_spline`` runs through the local coordinates
    (degree 1 is plain linear interpolation). The first and last points are
    kept exactly; timestamps and speeds are interpolated by arc length.
    """
    xy = trip.xy
    n = len(xy)
    if n < 2:
        raise ValueError("interpolation needs at least two updates")
    seg = np.sqrt(((xy[1:] - xy[:-1]) ** 2).sum(axis=1))
    s = np.concatenate([[0.0], np.cumsum(seg)])
    length = s[-1]
    if length == 0:
        raise ValueError(f"trip {trip.trip_id!r} has zero length")

    degree = int(p.d_spline)
    if degree > 1 and n < degree + 1:
        log.warning("trip %s: %d points cannot carry a degree-%d spline, using linear",
                    trip.trip_id, n, degree)
        degree = 1
    if degree > 1 and (seg == 0).any():
        keep = np.concatenate([[True], seg > 0])
        xy, s = xy[keep], s[keep]
        trip = trip.subset(keep)

    if degree == 1:
        targets = _arc_targets(length, p.interp_spacing)
        x = np.interp(targets, s, xy[:, 0])
        y = np.interp(targets, s, xy[:, 1])
        param = targets
    else:
        tck, _ = interpolate.splprep([xy[:, 0], xy[:, 1]], u=s / length, k=degree, s=0)
        n_dense = max(20 * n, int(math.ceil(length / p.interp_spacing)) * 20)
        u = np.linspace(0.0, 1.0, n_dense)
        dx, dy = interpolate.splev(u, tck)
        ds = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(dx), np.diff(dy)))])
        targets = _arc_targets(ds[-1], p.interp_spacing)
        x = np.interp(targets, ds, dx)
        y = np.interp(targets, ds, dy)
        param = np.interp(targets, ds, u) * length
        x[0], y[0] = xy[0]
        x[-1], y[-1] = xy[-1]

    t = np.interp(param, s, trip.t)
    speed = np.interp(param, s, np.nan_to_num(trip.speed))
    if trip.origin is not None:
        lat, lon = to_geo_array(x, y, trip.origin)
    else:
        lat = np.interp(param, s, trip.lat)
        lon = np.interp(param, s, trip.lon)
    return dataclasses.replace(
        trip, t=t, lat=lat, lon=lon, speed=speed, heading=None, x=x, y=y
    )


def preprocess_trip(trip: Trip, p: PreprocessParams) -> list[Trip]:
    """clean -> split -> interpolate for one projected trip; raises ``TripRejected``."""
    cleaned = clean_trip(trip, p)
    return [interpolate_trip(piece, p) for piece in split_trip(cleaned, p)]
