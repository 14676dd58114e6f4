"""Signal loss around one junction, and what it does to the scores.

Trips crossing the tunnel lose their fixes inside it and jump across in a
straight chord. The chords bend the heading field, so false junctions may
appear near the tunnel, while junctions elsewhere are still all found.
"""

import numpy as np

from roadgraph.config import defaults
from roadgraph.evaluation import match
from roadgraph.geo import to_geo_array, to_local_array
from roadgraph.pipeline import infer
from roadgraph.synth import NoiseModel, SiteScenario, Tunnel, generate_site, intersection_positions
from roadgraph.synth import simulate_trips

site = generate_site(seed=0)
truth = intersection_positions(site)
tunnel = Tunnel(truth[0, 0], truth[0, 1], radius=120.0, prob=0.6)
trips = simulate_trips(SiteScenario(site, seed=0, noise=NoiseModel(tunnels=[tunnel])))

cfg = defaults()
cfg.workers = 1
result = infer(trips, cfg)
lat, lon = to_geo_array(truth[:, 0], truth[:, 1], site.origin)
truth = np.column_stack(to_local_array(lat, lon, result.origin))
found = np.array([i.position for i in result.intersections]).reshape(-1, 2)

far = np.hypot(*(truth - truth[0]).T) > tunnel.radius
everywhere = match(found, truth, 20.0)
elsewhere = match(found, truth[far], 20.0)
print(f"all junctions:        precision {everywhere.precision:.2f}  recall {everywhere.recall:.2f}")
print(f"away from the tunnel: recall {elsewhere.recall:.2f} over {far.sum()} junctions")
for k in everywhere.unmatched_predicted:
    d = np.hypot(*(found[k] - truth[0]))
    print(f"  unmatched detection {d:.0f} m from the tunnel centre")
