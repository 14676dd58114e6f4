"""End-to-end acceptance checks, one test per criterion.

Every test records a PASS/FAIL line that is printed in the terminal summary.
"""

import dataclasses
import io
import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.distance import directed_hausdorff

import oracles
from conftest import ACCEPTANCE, merge_lane_site, reframe
from roadgraph.cli import main
from roadgraph.cluster import build_index, dbscan, range_query
from roadgraph.config import defaults
from roadgraph.evaluation import match, pr_curve
from roadgraph.geo import EARTH_RADIUS_M, GeoCoord, LocalCoord, haversine, normalize_heading, to_geo_array
from roadgraph.heading_grid import HeadingGrid, dissimilarity
from roadgraph.pipeline import infer
from roadgraph.synth import NoiseModel, SiteScenario, Tunnel, generate_site, intersection_positions
from roadgraph.synth import simulate_trips, straight_site
from roadgraph.trips import PreprocessParams, Trip, interpolate_trip, write_trips
from test_config import DOCUMENTED


def verdict(name, ok, detail):
    ACCEPTANCE.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    print(ACCEPTANCE[-1])
    assert ok, detail


def single_thread():
    cfg = defaults()
    cfg.workers = 1
    return cfg


def hausdorff(a, b):
    return max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0])


def long_gaps(trips, origin, min_gap):
    """Midpoints of consecutive fixes more than ``min_gap`` apart, per trip."""
    from roadgraph.geo import to_local_array

    out = []
    for t in trips:
        x, y = to_local_array(t.lat, t.lon, origin)
        xy = np.column_stack([x, y])
        gap = np.hypot(*np.diff(xy, axis=0).T)
        out.append(((xy[1:] + xy[:-1]) / 2)[gap > min_gap])
    return out


# ---------------------------------------------------------------- 1

def test_clean_site_is_recovered(clean_site, clean_trips):
    degrees = [clean_site.degree(n.node_id) for n in clean_site.nodes if n.kind == "intersection"]
    assert len(degrees) == 6 and all(3 <= d <= 4 for d in degrees)
    start = time.perf_counter()
    result = infer(clean_trips, single_thread())
    elapsed = time.perf_counter() - start
    truth = reframe(intersection_positions(clean_site), clean_site.origin, result.origin)
    found = np.array([i.position for i in result.intersections]).reshape(-1, 2)
    m = match(found, truth, 20.0)
    worst = 0.0
    inferred = [e.polyline for e in result.graph.edges]
    for e in clean_site.edges:
        line = reframe(e.polyline, clean_site.origin, result.origin)
        worst = max(worst, min(hausdorff(line, other) for other in inferred))
    ok = m.precision == 1.0 and m.recall == 1.0 and worst <= 10.0 and elapsed < 60.0
    verdict("clean site", ok, f"P={m.precision:.2f} R={m.recall:.2f} at 20 m, worst edge Hausdorff "
            f"{worst:.1f} m, {elapsed:.1f} s single-threaded")


# ---------------------------------------------------------------- 2

def test_second_radius_finds_the_merging_junction():
    site = merge_lane_site()
    trips = simulate_trips(SiteScenario(site, seed=0, n_trips=150))
    both = single_thread()
    small = single_thread()
    small.validation = dataclasses.replace(small.validation, radii=((30.0, 25.0),))
    res_both, res_small = infer(trips, both), infer(trips, small)
    junction = reframe([site.nodes[0].position], site.origin, res_both.origin)[0]

    def near(res):
        return [i for i in res.intersections if np.hypot(*(np.array(i.position) - junction)) <= 20]

    def counts(res):
        for entry in res.validation_debug:
            if np.hypot(entry["x"] - junction[0], entry["y"] - junction[1]) <= 20:
                return {r["R"]: r["road_count"] for r in entry["radii"]}
        return {}

    c = counts(res_both)
    found_both, found_small = near(res_both), near(res_small)
    ok = (len(found_both) == 1 and found_both[0].validated_at_R == (100.0,) and not found_small
          and c.get(30.0, 0) < 3 <= c.get(100.0, 0))
    verdict("multi-radius", ok, f"roads seen {c}; found with both radii: {len(found_both)}, "
            f"with R=30 only: {len(found_small)}")


# ---------------------------------------------------------------- 3

def test_straight_road_never_becomes_an_intersection():
    site = straight_site()
    mid = site.edges[0].polyline[len(site.edges[0].polyline) // 2]
    clean = simulate_trips(SiteScenario(site, seed=0, n_trips=100))
    noise = NoiseModel(tunnels=[Tunnel(mid[0], mid[1], 120.0, 0.05)])
    tunneled = simulate_trips(SiteScenario(site, seed=1, n_trips=100, noise=noise))
    chords = sum(len(g) > 0 for g in long_gaps(tunneled, site.origin, 100.0))
    a, b = infer(clean, single_thread()), infer(tunneled, single_thread())
    ok = len(a.intersections) == 0 and len(b.intersections) == 0 and chords > 0
    verdict("straight road", ok, f"intersections {len(a.intersections)} clean, {len(b.intersections)} "
            f"with {chords}/100 tunnel chords; candidates {len(a.candidates)}/{len(b.candidates)}")


# ---------------------------------------------------------------- 4

def test_noisy_region_degrades_only_locally():
    site = generate_site(0, 6, 3, 2)
    center = intersection_positions(site)[0]
    radius = 120.0
    noise = NoiseModel(tunnels=[Tunnel(center[0], center[1], radius, 0.6)])
    trips = simulate_trips(SiteScenario(site, seed=0, n_trips=300, noise=noise))

    # a trip goes through the region if it has a fix inside it or jumps across it
    from roadgraph.geo import to_local_array
    through = corrupted = 0
    for t, gaps in zip(trips, long_gaps(trips, site.origin, 40.0)):
        x, y = to_local_array(t.lat, t.lon, site.origin)
        inside = (np.hypot(x - center[0], y - center[1]) < radius).any()
        jumped = len(gaps) and (np.hypot(*(gaps - center).T) < radius).any()
        through += bool(inside or jumped)
        corrupted += bool(jumped)
    share = corrupted / max(through, 1)

    result = infer(trips, single_thread())
    truth = reframe(intersection_positions(site), site.origin, result.origin)
    c = reframe([center], site.origin, result.origin)[0]
    far = truth[np.hypot(*(truth - c).T) > radius]
    found = np.array([i.position for i in result.intersections]).reshape(-1, 2)
    m_all = match(found, truth, 20.0)
    m_far = match(found, far, 20.0)
    ok = share >= 0.5 and len(far) == len(truth) - 1 and m_far.recall == 1.0
    verdict("noise degradation", ok, f"{share:.0%} of {through} trips through the region corrupted; "
            f"recall away from it {m_far.recall:.2f}; overall P={m_all.precision:.2f} R={m_all.recall:.2f}")


# ---------------------------------------------------------------- 5

pairs = st.lists(st.tuples(st.floats(0, 300), st.floats(0, 300)), max_size=15)


@settings(max_examples=300, deadline=None)
@given(pairs, pairs, st.sampled_from(["greedy", "hungarian"]))
def _columns_never_drop(pred, act, method):
    curve = pr_curve(pred, act, [0, 5, 10, 20, 30, 40, 50, 100], method)
    assert np.all(np.diff(curve.column("precision")) >= 0)
    assert np.all(np.diff(curve.column("recall")) >= 0)


def test_pr_curve_properties():
    m = match([(0, 0), (100, 0)], [(2, 0)], 10)
    unit = (m.precision, m.recall) == (0.5, 1.0)
    try:
        _columns_never_drop()
        monotone, note = True, "300 random pairs"
    except AssertionError as exc:
        monotone, note = False, f"counterexample: {exc}"
    verdict("PR curve", unit and monotone, f"unit example P={m.precision} R={m.recall}; "
            f"columns non-decreasing over {note}")


# ---------------------------------------------------------------- 6

def test_clustering_matches_brute_force():
    rng = np.random.default_rng(2024)
    bad = []
    for k in range(500):
        n = int(rng.integers(0, 201))
        if k % 2:
            # integer lattice: exact boundary distances and duplicates
            pts = rng.integers(0, 60, (n, 2)).astype(float)
        else:
            pts = rng.uniform(0, 150, (n, 2))
            if n:
                pts[: n // 3] = pts[0] + rng.normal(0, 4, (n // 3, 2))
        eps = float(rng.choice([2.0, 5.0, 8.0, 12.0]))
        min_samples = int(rng.integers(1, 8))
        plist = pts.tolist()
        if dbscan(pts, eps, min_samples).tolist() != oracles.dbscan(plist, eps, min_samples):
            bad.append(("dbscan", k))
        idx = build_index(pts)
        for _ in range(3):
            c = rng.uniform(-10, 160, 2)
            r = float(rng.choice([0.0, 3.0, 5.0, 12.0, 40.0]))
            if range_query(idx, c, r).tolist() != oracles.within(plist, c, r):
                bad.append(("range", k))
    verdict("oracle equivalence", not bad, f"500 instances, mismatches: {bad[:5] or 'none'}")


# ---------------------------------------------------------------- 7

def test_numerical_checks():
    problems = []
    R = EARTH_RADIUS_M
    closed = [
        ((0, 0, 1, 0), R * math.pi / 180),
        ((0, 0, 0, 90), R * math.pi / 2),
        ((0, 0, 90, 0), R * math.pi / 2),
        ((10, 20, -10, -160), R * math.pi),
        ((60, 0, 60, 1), 2 * R * math.asin(math.cos(math.radians(60)) * math.sin(math.radians(0.5)))),
    ]
    for args, want in closed:
        if abs(haversine(*args) - want) > 0.1:
            problems.append(f"haversine{args}")

    cells = {(1, 1): math.pi / 2, (0, 1): 0.0, (2, 1): math.pi}
    keys = sorted(cells)
    grid = HeadingGrid(LocalCoord(0.0, 0.0), 5.0, np.array(keys), np.array([cells[k] for k in keys]),
                       np.ones(3, dtype=np.int64), "reflect")
    example = dissimilarity(grid, 5.0).cells[(1, 1)]
    if abs(example - 2.2214) > 1e-4:
        problems.append(f"dissimilarity example {example}")

    rng = np.random.default_rng(7)
    origin = GeoCoord(59.9, 10.4)
    p = PreprocessParams()
    worst = 0.0
    for _ in range(200):
        # bounded turns (45 degrees at most) on legs at least one spacing long
        turns = rng.uniform(-math.pi / 4, math.pi / 4, 12)
        legs = rng.uniform(p.interp_spacing, 40, 12)
        heading = rng.uniform(0, 2 * math.pi) + np.cumsum(turns)
        xy = np.vstack([[0, 0], np.cumsum(legs[:, None] * np.column_stack([np.cos(heading), np.sin(heading)]), 0)])
        lat, lon = to_geo_array(xy[:, 0], xy[:, 1], origin)
        trip = Trip("t", np.arange(len(xy), dtype=float), lat, lon, np.full(len(xy), 10.0),
                    x=xy[:, 0], y=xy[:, 1], origin=origin)
        out = interpolate_trip(trip, p).xy
        gaps = np.hypot(*np.diff(out, axis=0).T)
        worst = max(worst, float(np.abs(gaps[:-1] / p.interp_spacing - 1).max()))
        if gaps[-1] > p.interp_spacing * 1.1:
            problems.append("last interpolation step too long")
    if worst > 0.1:
        problems.append(f"interpolation spacing off by {worst:.1%}")

    draws = rng.uniform(0, 2 * math.pi, 1_000_000)
    folded = normalize_heading(draws)
    mirrored = normalize_heading(2 * math.pi - draws)
    if not ((folded >= 0) & (folded <= math.pi)).all():
        problems.append("normalized heading out of range")
    if np.abs(folded - mirrored).max() > 1e-9:
        problems.append("normalized heading not symmetric")
    verdict("numerical checks", not problems, f"dissimilarity example {example:.4f}, worst interior "
            f"interpolation deviation {worst:.1%}; problems: {problems or 'none'}")


# ---------------------------------------------------------------- 8

def test_runs_are_reproducible(clean_trips, tmp_path):
    path = tmp_path / "trips.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_trips(clean_trips, fh)
    outputs = {}
    for name, workers in (("first", "1"), ("second", "1"), ("parallel", "4")):
        code = main(["infer", str(path), "--seed", "3", "--workers", workers, "--out", str(tmp_path / name)])
        assert code == 0
        outputs[name] = (tmp_path / name / "graph.geojson").read_bytes()
    same = outputs["first"] == outputs["second"]
    parallel = outputs["first"] == outputs["parallel"]
    verdict("determinism", same and parallel, f"repeat run identical: {same}; "
            f"--workers 4 identical to --workers 1: {parallel}")


# ---------------------------------------------------------------- 9

def test_config_defaults_match_documentation():
    cfg = defaults()
    wrong = [(table, section, key) for table, entries in DOCUMENTED.items()
             for (section, key), want in entries.items() if getattr(getattr(cfg, section), key) != want]
    n = sum(len(v) for v in DOCUMENTED.values())
    verdict("config fidelity", not wrong, f"{n} documented defaults in {len(DOCUMENTED)} tables; "
            f"mismatches: {wrong or 'none'}")
