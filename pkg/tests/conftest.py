import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from roadgraph.geo import to_geo_array, to_local_array  # noqa: E402
from roadgraph.synth import SiteScenario, generate_site, polyline_site, simulate_trips  # noqa: E402


def reframe(xy, source_origin, target_origin):
    """Local coordinates in one origin's frame expressed in another's."""
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    lat, lon = to_geo_array(xy[:, 0], xy[:, 1], source_origin)
    x, y = to_local_array(lat, lon, target_origin)
    return np.column_stack([x, y])


def merge_lane_site():
    """A junction whose side road hugs the main road for a while before curving away.

    Near the junction the side road runs about 14 m from the main road, so
    the two look like one road in a small annulus and like two in a large one.
    """
    j = np.array([500.0, 500.0])
    offset, parallel, bend_radius = 14.0, 30.0, 80.0
    lane = [j, j + [offset / np.tan(np.radians(60)), offset], j + [parallel, offset]]
    center = j + [parallel, offset + bend_radius]
    theta = np.linspace(-np.pi / 2, -np.pi / 2 + np.radians(45), 40)
    arc = center + bend_radius * np.column_stack([np.cos(theta), np.sin(theta)])
    end = arc[-1] + 300 * np.array([np.cos(np.radians(45)), np.sin(np.radians(45))])
    lane = np.vstack([lane, arc[1:], end])
    return polyline_site(
        [("intersection", *j), ("load", 100, 500), ("dropoff", 900, 500), ("dropoff", *lane[-1])],
        [(1, 0, [[100, 500], j]), (0, 2, [j, [900, 500]]), (0, 3, lane)],
    )


@pytest.fixture(scope="session")
def clean_site():
    return generate_site(0, 6, 3, 2)


@pytest.fixture(scope="session")
def clean_trips(clean_site):
    return simulate_trips(SiteScenario(clean_site, seed=0))


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
