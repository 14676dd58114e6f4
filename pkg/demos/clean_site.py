"""Walk through one synthetic site from trips to a scored road graph.

Run with ``python3 demos/clean_site.py [out_dir]``; SVG plots land in
``out_dir`` (default ``demo_out``).
"""

import sys
from pathlib import Path

import numpy as np

from roadgraph.config import defaults
from roadgraph.evaluation import pr_curve
from roadgraph.geo import to_geo_array, to_local_array
from roadgraph.pipeline import infer
from roadgraph.plot import plot_graph, plot_grid, plot_pr
from roadgraph.synth import SiteScenario, generate_site, intersection_positions, simulate_trips

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(parents=True, exist_ok=True)

# A site with six junctions, three loading areas and two dumps.
site = generate_site(seed=0, n_intersections=6, n_load=3, n_dump=2)
trips = simulate_trips(SiteScenario(site, seed=0, n_trips=300))
print(f"simulated {len(trips)} trips, {sum(len(t) for t in trips)} GPS updates")

cfg = defaults()
cfg.workers = 1
result = infer(trips, cfg)
print("stage timings (s):", result.report["timings_s"])
print(f"{result.report['candidates']} candidate(s) from the heading grid, "
      f"{len(result.intersections)} validated intersection(s)")
for it in result.intersections:
    print(f"  ({it.x:7.1f}, {it.y:7.1f})  roads={it.outgoing_roads}  accepted at R={it.validated_at_R}")

# The inferred graph lives in a frame centred on the data; move the labels there.
truth = intersection_positions(site)
lat, lon = to_geo_array(truth[:, 0], truth[:, 1], site.origin)
truth = np.column_stack(to_local_array(lat, lon, result.origin))
found = [i.position for i in result.intersections]
curve = pr_curve(found, truth, cfg.tolerances)
print("tolerance  precision  recall")
for p in curve.points:
    print(f"{p.tolerance:9g}  {p.precision:9.2f}  {p.recall:6.2f}")

plot_graph(result.graph, out / "graph.svg", trips=result.trips, truth=site)
plot_grid(result.grid, result.field, out / "grid.svg", candidates=result.candidates,
          intersections=result.intersections, threshold=cfg.candidates.threshold)
plot_pr(curve, out / "pr_curve.svg", "clean site")
print(f"plots written to {out}/")
