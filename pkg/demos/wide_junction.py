"""Why two validation radii: a side road that peels off slowly.

Close to the junction the side road runs 14 m beside the main road, so the
small annulus sees one blurred road on that side. Further out the roads have
separated, and the large annulus counts three.
"""

import dataclasses

import numpy as np

from roadgraph.config import defaults
from roadgraph.pipeline import infer
from roadgraph.synth import SiteScenario, polyline_site, simulate_trips

junction = np.array([500.0, 500.0])
side = [junction, junction + [14 / np.tan(np.radians(60)), 14], junction + [30, 14]]
center = junction + [30, 94]
theta = np.linspace(-np.pi / 2, -np.pi / 4, 40)
arc = center + 80 * np.column_stack([np.cos(theta), np.sin(theta)])
side = np.vstack([side, arc[1:], arc[-1] + 300 * np.array([np.cos(np.pi / 4), np.sin(np.pi / 4)])])
site = polyline_site(
    [("intersection", *junction), ("load", 100, 500), ("dropoff", 900, 500), ("dropoff", *side[-1])],
    [(1, 0, [[100, 500], junction]), (0, 2, [junction, [900, 500]]), (0, 3, side)],
)
trips = simulate_trips(SiteScenario(site, seed=0, n_trips=150))

for radii in (((30.0, 25.0), (100.0, 25.0)), ((30.0, 25.0),)):
    cfg = defaults()
    cfg.workers = 1
    cfg.validation = dataclasses.replace(cfg.validation, radii=radii)
    result = infer(trips, cfg)
    print(f"radii {[r for r, _ in radii]}: {len(result.intersections)} intersection(s)")
    for entry in result.validation_debug:
        seen = ", ".join(f"R={r['R']:g}: {r['road_count']} road(s)" for r in entry["radii"])
        print(f"  candidate ({entry['x']:.0f}, {entry['y']:.0f})  {seen}  accepted={entry['accepted']}")
