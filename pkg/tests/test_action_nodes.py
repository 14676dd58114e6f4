from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from roadgraph.action_nodes import ActionParams, action_nodes, dropoff_nodes, load_nodes
from roadgraph.geo import GeoCoord, to_geo_array
from roadgraph.trips import Event

ORIGIN = GeoCoord(59.9, 10.4)


def trips_with(events, kind="load", excavator="e1", task="k1"):
    out = []
    for k, (x, y) in enumerate(events):
        lat, lon = to_geo_array(x, y, ORIGIN)
        ev = Event(float(k), float(lat), float(lon))
        out.append(SimpleNamespace(
            trip_id=f"t{k}", origin=ORIGIN, excavator_id=excavator, task_id=task,
            load_event=ev if kind == "load" else None,
            dropoff_event=ev if kind == "dropoff" else None,
        ))
    return out


def blob(center, n, radius, seed):
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.uniform(0, 1, n))
    t = rng.uniform(0, 2 * np.pi, n)
    return np.asarray(center) + np.column_stack([r * np.cos(t), r * np.sin(t)])


def test_identical_events_give_that_point():
    nodes = load_nodes(trips_with([(200, 300)] * 6))
    assert len(nodes) == 1
    assert nodes[0].position == pytest.approx((200, 300), abs=1e-6)
    assert nodes[0].support == 6 and nodes[0].kind == "load"


def test_trimmed_mean_drops_an_outlier():
    xs = [100.0 + k for k in range(9)] + [600.0]
    nodes = load_nodes(trips_with([(x, 50.0) for x in xs]), ActionParams(trim_fraction=0.1))
    assert nodes[0].x == pytest.approx(oracles.trimmed_mean(xs, 0.1), abs=1e-6)
    assert nodes[0].x == pytest.approx(104.5, abs=1e-6)


def test_zero_trim_is_the_plain_mean():
    pts = blob((300, 300), 11, 20, 1)
    node = load_nodes(trips_with(pts), ActionParams(trim_fraction=0.0))[0]
    assert node.position == pytest.approx(tuple(pts.mean(axis=0)), abs=1e-6)


def test_nearby_groups_merge_to_their_centroid():
    trips = trips_with([(100, 100)] * 4, excavator="e1") + trips_with([(160, 100)] * 4, excavator="e2")
    nodes = load_nodes(trips)
    assert len(nodes) == 1
    assert nodes[0].position == pytest.approx((130, 100), abs=1e-6)
    assert nodes[0].source_ids == ("e1/k1", "e2/k1")


def test_distant_groups_stay_apart():
    trips = trips_with([(100, 100)] * 4, task="a") + trips_with([(400, 100)] * 4, task="b")
    assert len(load_nodes(trips)) == 2


def test_missing_excavator_falls_back_to_task(caplog):
    trips = trips_with([(100, 100)] * 3, excavator=None, task="a") + trips_with([(500, 500)] * 3, task="a")
    nodes = load_nodes(trips)
    assert "excavator" in caplog.text
    # both groups share task "a", so they pool into one trimmed mean
    assert len(nodes) == 1 and nodes[0].support == 6


def test_no_dropoffs():
    assert dropoff_nodes(trips_with([(1, 1)] * 3, kind="load")) == []


def test_single_dropoff_blob():
    pts = blob((250, 250), 20, 5, 2)
    nodes = dropoff_nodes(trips_with(pts, kind="dropoff"))
    assert len(nodes) == 1
    assert nodes[0].position == pytest.approx(tuple(pts.mean(axis=0)), abs=1e-6)
    assert nodes[0].support == 20


def test_dropoff_blobs_within_merge_distance():
    a, b = blob((250, 250), 20, 5, 3), blob((330, 250), 20, 5, 4)
    nodes = dropoff_nodes(trips_with(np.vstack([a, b]), kind="dropoff"))
    assert len(nodes) == 1
    assert nodes[0].position == pytest.approx(tuple(np.vstack([a, b]).mean(axis=0)), abs=1e-6)


def test_isolated_dropoffs_are_noise():
    pts = np.vstack([blob((250, 250), 20, 5, 5), [[900, 900], [1200, 100]]])
    nodes = dropoff_nodes(trips_with(pts, kind="dropoff"))
    assert [n.support for n in nodes] == [20]


def test_loads_come_before_dropoffs():
    trips = trips_with([(100, 100)] * 5) + trips_with(blob((700, 700), 10, 5, 6), kind="dropoff")
    assert [n.kind for n in action_nodes(trips)] == ["load", "dropoff"]


def test_kinds_never_merge_with_each_other():
    trips = trips_with([(100, 100)] * 5) + trips_with(blob((100, 100), 10, 3, 7), kind="dropoff")
    assert sorted(n.kind for n in action_nodes(trips)) == ["dropoff", "load"]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 3)), min_size=1, max_size=8),
       st.integers(0, 10_000), st.randoms())
def test_same_kind_nodes_end_up_far_apart_in_any_order(groups, seed, rnd):
    rng = np.random.default_rng(seed)
    trips = []
    for k, (gx, gy) in enumerate(groups):
        center = (200 + 70 * gx, 200 + 70 * gy)
        pts = center + rng.normal(0, 5, (6, 2))
        trips += trips_with(pts, excavator=f"e{k}")
        trips += trips_with(pts + rng.normal(0, 2, (6, 2)), kind="dropoff", excavator=f"e{k}")
    nodes = action_nodes(trips)
    for kind in ("load", "dropoff"):
        pts = np.array([n.position for n in nodes if n.kind == kind]).reshape(-1, 2)
        if len(pts) > 1:
            d = np.hypot(*(pts[:, None] - pts[None]).transpose(2, 0, 1))
            assert d[np.triu_indices(len(pts), 1)].min() > 100
    shuffled = list(trips)
    rnd.shuffle(shuffled)
    again = action_nodes(shuffled)
    assert [(n.kind, n.x, n.y, n.support) for n in again] == [(n.kind, n.x, n.y, n.support) for n in nodes]


def test_parameter_validation():
    with pytest.raises(ValueError):
        ActionParams(trim_fraction=0.5)
    with pytest.raises(ValueError):
        ActionParams(d_load_dump=0)
