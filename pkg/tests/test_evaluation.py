import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from roadgraph.evaluation import (
    LabelError,
    inside_polygon,
    match,
    pr_curve,
    read_labels,
    write_labels,
    write_pr_csv,
)
from roadgraph.geo import GeoCoord

point_sets = st.lists(st.tuples(st.integers(0, 60), st.integers(0, 60)), max_size=12)


def test_identical_sets_match_fully():
    pts = [(0, 0), (100, 0), (0, 100)]
    m = match(pts, pts, 0)
    assert (m.tp, m.fp, m.fn, m.precision, m.recall) == (3, 0, 0, 1.0, 1.0)


def test_one_of_two_predictions_hits():
    m = match([(0, 0), (100, 0)], [(2, 0)], 10)
    assert (m.precision, m.recall) == (0.5, 1.0)
    assert m.pairs == [(0, 0, 2.0)]


def test_empty_prediction_has_undefined_precision():
    m = match([], [(0, 0)], 10)
    assert m.precision_undefined and m.precision == 0.0 and m.recall == 0.0
    curve = pr_curve([], [(0, 0)], [10, 20])
    assert curve.column("undefined").tolist() == [True, True]


def test_no_labels_gives_zero_recall():
    m = match([(0, 0)], [], 10)
    assert (m.tp, m.fp, m.fn, m.recall) == (0, 1, 0, 0.0)


def test_zero_tolerance_needs_exact_position():
    assert match([(1, 1)], [(1, 1)], 0).tp == 1
    assert match([(1, 1)], [(1, 1.001)], 0).tp == 0


def test_greedy_can_miss_the_larger_matching():
    # P0 grabs the closest label A and strands P1, whose only neighbour is A
    pred, act = [(0, 0), (-9, 0)], [(1, 0), (9, 0)]
    assert match(pred, act, 10).tp == 1
    assert match(pred, act, 10, "hungarian").tp == 2


def test_parameter_checks():
    with pytest.raises(ValueError):
        match([], [], -1)
    with pytest.raises(ValueError):
        match([], [], 1, "nearest")
    with pytest.raises(ValueError):
        pr_curve([], [], [20, 10])


@settings(max_examples=200, deadline=None)
@given(point_sets, point_sets, st.sampled_from([0.0, 3.0, 5.0, 10.0, 25.0]))
def test_counts_match_reference(pred, act, tol):
    g = match(pred, act, tol)
    h = match(pred, act, tol, "hungarian")
    assert g.tp == oracles.greedy_match_count(pred, act, tol)
    assert h.tp == oracles.max_matching_count(pred, act, tol)
    for m in (g, h):
        assert m.tp + m.fn == len(act) and m.tp + m.fp == len(pred)
        assert len({i for i, _, _ in m.pairs}) == m.tp == len({j for _, j, _ in m.pairs})
        assert all(d <= tol for _, _, d in m.pairs)


@settings(max_examples=150, deadline=None)
@given(point_sets, point_sets, st.sampled_from([0.0, 4.0, 10.0]))
def test_swapping_roles_swaps_precision_and_recall(pred, act, tol):
    a, b = match(pred, act, tol, "hungarian"), match(act, pred, tol, "hungarian")
    assert (a.tp, a.fp, a.fn) == (b.tp, b.fn, b.fp)


@settings(max_examples=150, deadline=None)
@given(point_sets, point_sets)
def test_maximum_matching_grows_with_tolerance(pred, act):
    tps = pr_curve(pred, act, [0, 5, 10, 20, 40], "hungarian").column("tp")
    assert np.all(np.diff(tps) >= 0)


def test_pr_csv_layout():
    buf = io.StringIO()
    write_pr_csv(pr_curve([(0, 0), (100, 0)], [(2, 0)], [10, 20, 30, 40, 50]), buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "tolerance_m,precision,recall,tp,fp,fn"
    assert lines[1] == "10,0.500000,1.000000,1,1,0"
    assert len(lines) == 6


def test_labels_in_meters_round_trip():
    buf = io.StringIO()
    write_labels([(1.5, -2.25), (300, 40)], buf)
    pts, kind = read_labels(io.StringIO(buf.getvalue()))
    assert kind == "xy" and pts.tolist() == [[1.5, -2.25], [300, 40]]


def test_labels_in_degrees_round_trip():
    origin = GeoCoord(59.9, 10.4)
    buf = io.StringIO()
    write_labels([(120, -80)], buf, origin)
    assert buf.getvalue().startswith("lat,lon\n")
    pts, kind = read_labels(io.StringIO(buf.getvalue()), origin)
    assert kind == "latlon"
    assert pts[0] == pytest.approx([120, -80], abs=0.01)


@pytest.mark.parametrize("text, origin", [
    ("a,b\n1,2\n", None),
    ("x,y\n1,oops\n", None),
    ("lat,lon\n59.9,10.4\n", None),
])
def test_bad_labels(text, origin):
    with pytest.raises(LabelError):
        read_labels(io.StringIO(text), origin)


def test_polygon_filter():
    square = [(0, 0), (10, 0), (10, 10), (0, 10)]
    assert inside_polygon([(5, 5), (15, 5), (-1, 2), (9.9, 0.1)], square).tolist() == [True, False, False, True]
    assert inside_polygon([(1, 1)], [(0, 0), (1, 1)]).tolist() == [False]


def test_polygon_filter_concave():
    notch = [(0, 0), (10, 0), (10, 10), (5, 3), (0, 10)]
    assert inside_polygon([(5, 8), (5, 1), (2, 6)], notch).tolist() == [False, True, True]
