"""Static SVG debug plots (heading grid, dissimilarity, validation, graph, PR curve)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .evaluation import PrCurve  # noqa: E402
from .geo import to_geo_array, to_local_array  # noqa: E402
from .heading_grid import DissimilarityField, HeadingGrid  # noqa: E402
from .roads import RoadGraph  # noqa: E402

KIND_STYLE = {
    "intersection": dict(marker="o", color="tab:red", s=40),
    "load": dict(marker="s", color="tab:green", s=50),
    "dropoff": dict(marker="^", color="tab:blue", s=50),
}


def _save(fig, path) -> None:
    with plt.rc_context({"svg.hashsalt": "roadgraph"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _cells(ax, grid: HeadingGrid, values, cmap, label):
    if len(grid) == 0:
        return
    c = grid.centers()
    sc = ax.scatter(c[:, 0], c[:, 1], c=values, s=4, marker="s", cmap=cmap, linewidths=0)
    ax.figure.colorbar(sc, ax=ax, label=label)


def plot_grid(grid: HeadingGrid, field: DissimilarityField | None, path,
              candidates=None, intersections=None, threshold: float | None = None) -> None:
    """Median headings and dissimilarity side by side, with candidates and accepted intersections."""
    fig, axes = plt.subplots(1, 2, figsize=(13, 6))
    _cells(axes[0], grid, grid.median, "twilight", "median heading (rad)")
    axes[0].set_title("median heading per cell")
    if field is not None:
        _cells(axes[1], grid, field.values, "viridis", "dissimilarity")
        if threshold is not None and len(grid):
            hot = field.values >= threshold
            c = grid.centers()[hot]
            axes[1].scatter(c[:, 0], c[:, 1], s=6, facecolors="none", edgecolors="red",
                            linewidths=0.5, label="above threshold")
    axes[1].set_title("directional dissimilarity")
    for ax in axes:
        if candidates is not None and len(candidates):
            cand = np.asarray(candidates)
            ax.scatter(cand[:, 0], cand[:, 1], marker="x", color="orange", s=40, label="candidate")
        if intersections:
            pts = np.array([i.position for i in intersections])
            ax.scatter(pts[:, 0], pts[:, 1], marker="o", facecolors="none", edgecolors="red",
                       s=120, label="intersection")
        ax.set_aspect("equal")
        ax.set_xlabel("x (m)")
        ax.set_ylabel("y (m)")
    handles, labels = axes[1].get_legend_handles_labels()
    if handles:
        axes[1].legend(loc="upper right", fontsize=7)
    _save(fig, path)


def plot_validation(debug: list, index_points, path, radii=None) -> None:
    """Candidates with their annuli drawn over all interpolated points; accepted ones in red."""
    pts = np.asarray(index_points)
    fig, ax = plt.subplots(figsize=(8, 8))
    if len(pts):
        ax.scatter(pts[:, 0], pts[:, 1], s=0.2, color="0.6", rasterized=False)
    for rec in debug:
        color = "tab:red" if rec["accepted"] else "tab:gray"
        ax.plot(rec["x"], rec["y"], marker="x", color=color)
        for r in rec["radii"]:
            for rad in (r["R"], r["R"] + r["L"]):
                ax.add_patch(plt.Circle((rec["x"], rec["y"]), rad, fill=False, color=color,
                                        linewidth=0.5, linestyle="--"))
            ax.annotate(f'{r["road_count"]}', (rec["x"] + r["R"], rec["y"]), fontsize=6, color=color)
    ax.set_aspect("equal")
    ax.set_title("candidate validation (roads counted per radius)")
    _save(fig, path)


def _same_frame(xy, source, target):
    """Re-express local coordinates when two graphs use different origins."""
    if source is None or target is None or source == target:
        return xy
    lat, lon = to_geo_array(xy[:, 0], xy[:, 1], source)
    return np.column_stack(to_local_array(lat, lon, target))


def plot_graph(graph: RoadGraph, path, trips=None, truth: RoadGraph | None = None) -> None:
    fig, ax = plt.subplots(figsize=(8, 8))
    if trips:
        for t in trips:
            xy = t.xy if hasattr(t, "xy") else np.asarray(t)
            ax.plot(xy[:, 0], xy[:, 1], color="0.8", linewidth=0.3)
    if truth is not None:
        for e in truth.edges:
            line = _same_frame(np.asarray(e.polyline, dtype=float), truth.origin, graph.origin)
            ax.plot(line[:, 0], line[:, 1], color="black", linewidth=3, alpha=0.25)
    for e in graph.edges:
        line = np.asarray(e.polyline)
        ax.plot(line[:, 0], line[:, 1], linewidth=1.5, linestyle="--" if e.v is None else "-")
    for kind, style in KIND_STYLE.items():
        pts = np.array([n.position for n in graph.nodes if n.kind == kind]).reshape(-1, 2)
        if len(pts):
            ax.scatter(pts[:, 0], pts[:, 1], label=kind, zorder=3, **style)
    ax.set_aspect("equal")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.legend(loc="upper right", fontsize=8)
    _save(fig, path)


def plot_pr(curve: PrCurve, path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    tol = curve.column("tolerance")
    ax.plot(tol, curve.column("precision"), marker="o", label="precision")
    ax.plot(tol, curve.column("recall"), marker="s", label="recall")
    ax.set_ylim(-0.05, 1.05)
    ax.set_xlabel("detection tolerance radius (m)")
    ax.set_ylabel("score")
    if title:
        ax.set_title(title)
    ax.legend()
    ax.grid(alpha=0.3)
    _save(fig, path)
