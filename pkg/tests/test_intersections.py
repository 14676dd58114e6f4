import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roadgraph.cluster import SpatialIndex
from roadgraph.geo import LocalCoord
from roadgraph.heading_grid import DissimilarityField, HeadingGrid
from roadgraph.intersections import (
    CandidateParams,
    ValidationParams,
    find_candidates,
    validate_all,
    validate_candidate,
)

VP = ValidationParams()


def field_of(cells):
    """Grid plus dissimilarity field from {(i, j): value} on 5 m cells anchored at 0."""
    keys = sorted(cells)
    ij = np.array(keys, dtype=np.int64).reshape(-1, 2)
    grid = HeadingGrid(LocalCoord(0.0, 0.0), 5.0, ij, np.zeros(len(keys)), np.ones(len(keys), dtype=np.int64))
    return DissimilarityField(ij, np.array([cells[k] for k in keys], dtype=float)), grid


def arms(center, angles_deg, length=160.0, passes=20, jitter=1.0, seed=0, start=0.0):
    """Traffic points along straight arms leaving ``center``."""
    rng = np.random.default_rng(seed)
    pts = []
    s = np.arange(start, length, 5.0)
    for ang in angles_deg:
        d = np.array([math.cos(math.radians(ang)), math.sin(math.radians(ang))])
        for _ in range(passes):
            pts.append(center + s[:, None] * d + rng.normal(0, jitter, (len(s), 2)))
    return np.vstack(pts)


# ---------------------------------------------------------------- candidates

def test_flat_field_has_no_candidates():
    assert len(find_candidates(*field_of({(i, 0): 0.0 for i in range(10)}), CandidateParams())) == 0


def test_single_hot_cell_is_dropped():
    cells = {(i, 0): 0.0 for i in range(10)} | {(4, 0): 3.0}
    assert len(find_candidates(*field_of(cells), CandidateParams())) == 0


def test_hot_block_gives_its_centroid():
    cells = {(i, j): 0.0 for i in range(8) for j in range(8)}
    cells |= {(3, 3): 2.0, (3, 4): 2.0, (4, 3): 2.0, (4, 4): 2.0}
    cand = find_candidates(*field_of(cells), CandidateParams())
    assert cand.tolist() == [[20.0, 20.0]]


def test_threshold_can_be_given_in_degrees():
    p = CandidateParams(delta_phi_thr=1.4, delta_phi_thr_unit="deg")
    assert p.threshold == pytest.approx(math.radians(1.4))
    assert CandidateParams().threshold == 1.4


def test_raising_the_threshold_can_split_a_chain():
    # hot cells 10 m apart along a row; the middle one is cooler and bridges the chain
    cells = {(0, 0): 2.0, (2, 0): 2.0, (4, 0): 1.5, (6, 0): 2.0, (8, 0): 2.0}
    low = find_candidates(*field_of(cells), CandidateParams(delta_phi_thr=1.4))
    high = find_candidates(*field_of(cells), CandidateParams(delta_phi_thr=1.8))
    assert (len(low), len(high)) == (1, 2)


@settings(max_examples=100, deadline=None)
@given(st.dictionaries(st.tuples(st.integers(0, 15), st.integers(0, 15)), st.floats(0, 4),
                       min_size=1, max_size=60),
       st.floats(0.1, 3.0), st.floats(1e-3, 1.0))
def test_raising_the_threshold_only_removes_flagged_cells(cells, thr, extra):
    field, grid = field_of(cells)
    low = {k for k, v in field.cells.items() if v >= CandidateParams(delta_phi_thr=thr).threshold}
    high = {k for k, v in field.cells.items() if v >= CandidateParams(delta_phi_thr=thr + extra).threshold}
    assert high <= low
    # without bridging cells the count cannot grow: if nothing in between is lost, groups stay whole
    if high == low:
        assert len(find_candidates(field, grid, CandidateParams(delta_phi_thr=thr + extra))) == \
            len(find_candidates(field, grid, CandidateParams(delta_phi_thr=thr)))


# ---------------------------------------------------------------- validation

C = np.array([500.0, 500.0])


def test_no_points_is_invalid():
    assert validate_candidate(C, SpatialIndex([]), VP, 30, 25) == (False, 0)


def test_straight_road_has_two_roads():
    idx = SpatialIndex(arms(C, [0, 180]))
    assert validate_candidate(C, idx, VP, 30, 25) == (False, 2)


def test_t_junction_has_three_roads():
    idx = SpatialIndex(arms(C, [0, 90, 180]))
    assert validate_candidate(C, idx, VP, 30, 25) == (True, 3)


def test_four_way_crossing_has_four_roads():
    idx = SpatialIndex(arms(C, [0, 90, 180, 270]))
    assert validate_candidate(C, idx, VP, 30, 25) == (True, 4)


def test_disconnected_parallel_road_is_ignored():
    main = arms(C, [0, 180])
    # a separate road 30 m north, crossing the annulus but never within d_passing of C
    parallel = arms(C + [-150, 30], [0], length=300, seed=1)
    idx = SpatialIndex(np.vstack([main, parallel]))
    assert validate_candidate(C, idx, VP, 30, 25) == (False, 2)
    debug = {}
    validate_candidate(C, SpatialIndex(parallel), VP, 30, 25, debug=debug)
    assert debug["n_valid"] == 0


def test_connected_side_road_counts():
    main = arms(C, [0, 180])
    side = arms(C, [90], seed=2)
    assert validate_candidate(C, SpatialIndex(np.vstack([main, side])), VP, 30, 25) == (True, 3)


def test_thin_arm_below_group_size_is_not_a_road():
    # one pass ending 45 m out leaves 3 annulus points on the third arm; a road needs more than 5
    pts = np.vstack([arms(C, [0, 180]), arms(C, [90], length=45, passes=1, jitter=0.0)])
    assert validate_candidate(C, SpatialIndex(pts), VP, 30, 25) == (False, 2)


def test_subsampling_caps_the_point_count():
    idx = SpatialIndex(arms(C, [0, 90, 180], passes=60))
    debug = {}
    res = validate_candidate(C, idx, VP, 30, 25, rng=np.random.default_rng(1), debug=debug)
    assert debug["n_points"] == VP.n_max_val
    assert res == (True, 3)


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(-1e4, 1e4), st.floats(-1e4, 1e4),
       st.sampled_from([[0, 180], [0, 90, 180], [0, 120, 240], [0, 90, 180, 270]]))
def test_validation_is_invariant_under_rigid_motion(angle, dx, dy, layout):
    pts = arms(C, layout, passes=8, seed=3)
    rot = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    moved = (pts - C) @ rot.T + C + [dx, dy]
    base = validate_candidate(C, SpatialIndex(pts), VP, 30, 25)
    after = validate_candidate(C + [dx, dy], SpatialIndex(moved), VP, 30, 25)
    assert base == after
    assert base.road_count == len(layout)


def test_multi_radius_acceptance_is_a_disjunction():
    # the side arm is only 70 m long: it crosses the small annulus but not the large one
    pts = np.vstack([arms(C, [0, 180], length=200), arms(C, [90], length=70, seed=4)])
    idx = SpatialIndex(pts)
    debug = []
    out = validate_all([C], idx, VP, debug=debug)
    counts = {r["R"]: r["road_count"] for r in debug[0]["radii"]}
    assert counts == {30.0: 3, 100.0: 2}
    assert out[0].validated_at_R == (30.0,)
    assert out[0].outgoing_roads == 3
    long_arms = SpatialIndex(arms(C, [0, 90, 180], length=200))
    assert validate_all([C], long_arms, VP)[0].validated_at_R == (30.0, 100.0)


def test_rejected_at_every_radius():
    idx = SpatialIndex(arms(C, [0, 180], length=200))
    debug = []
    assert validate_all([C], idx, VP, debug=debug) == []
    assert debug[0]["accepted"] is False


def test_close_accepted_candidates_merge():
    idx = SpatialIndex(arms(C, [0, 90, 180, 270]))
    out = validate_all([C, C + [6, 0], C + [300, 300]], idx, VP)
    assert len(out) == 1
    assert (out[0].x, out[0].y) == pytest.approx((503.0, 500.0))
    assert out[0].outgoing_roads == 4


def test_results_do_not_depend_on_worker_count():
    idx = SpatialIndex(arms(C, [0, 90, 180], passes=60))
    cands = [C, C + [3, 2], C + [-4, 1]]
    one = validate_all(cands, idx, VP, seed=9, workers=1)
    many = validate_all(cands, idx, VP, seed=9, workers=4)
    assert one == many
