"""Slow, obviously-correct reference implementations used to check the library.

Nothing here imports the package under test.
"""

from __future__ import annotations

import math
import statistics

EARTH_R = 6_371_000.0


def great_circle(lat1, lon1, lat2, lon2):
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp, dl = p2 - p1, math.radians(lon2 - lon1)
    h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_R * math.asin(min(1.0, math.sqrt(h)))


def dist(a, b):
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2)


def within(points, center, radius):
    return [i for i, p in enumerate(points) if dist(p, center) <= radius]


def dbscan(points, eps, min_samples):
    """Textbook sequential DBSCAN; -1 marks noise."""
    n = len(points)
    neigh = [within(points, points[i], eps) for i in range(n)]
    core = [len(nb) >= min_samples for nb in neigh]
    labels = [None] * n
    cluster = -1
    for i in range(n):
        if labels[i] is not None or not core[i]:
            continue
        cluster += 1
        labels[i] = cluster
        queue = list(neigh[i])
        while queue:
            j = queue.pop(0)
            if labels[j] is None or labels[j] == -1:
                first_visit = labels[j] is None
                labels[j] = cluster
                if core[j] and first_visit:
                    queue.extend(neigh[j])
    return [-1 if lab is None else lab for lab in labels]


def single_linkage(points, threshold):
    """Groups (as sorted index lists) of the transitive 'within threshold' relation."""
    n = len(points)
    seen = [False] * n
    groups = []
    for i in range(n):
        if seen[i]:
            continue
        seen[i] = True
        stack, members = [i], []
        while stack:
            a = stack.pop()
            members.append(a)
            for b in range(n):
                if not seen[b] and dist(points[a], points[b]) <= threshold:
                    seen[b] = True
                    stack.append(b)
        groups.append(sorted(members))
    return groups


def partition(labels):
    """Set of frozensets of indices sharing a non-negative label, plus the noise set."""
    groups = {}
    for i, lab in enumerate(labels):
        groups.setdefault(int(lab), set()).add(i)
    noise = frozenset(groups.pop(-1, set()))
    return {frozenset(g) for g in groups.values()}, noise


def cell_dissimilarity(cells, n_res, d_nbr, diff):
    """Eq.-style sum over populated neighbor cells, by direct double loop.

    ``cells`` maps (i, j) -> median.
    """
    out = {}
    for (i, j), m in cells.items():
        total = 0.0
        for (k, l), m2 in cells.items():
            if (k, l) == (i, j):
                continue
            if math.hypot(k - i, l - j) * n_res <= d_nbr:
                total += diff(m, m2) ** 2
        out[(i, j)] = math.sqrt(total)
    return out


def cell_medians(points_with_headings, n_res, origin=(0.0, 0.0)):
    cells = {}
    for (x, y), h in points_with_headings:
        key = (math.floor((x - origin[0]) / n_res), math.floor((y - origin[1]) / n_res))
        cells.setdefault(key, []).append(h)
    return {k: statistics.median(v) for k, v in cells.items()}


def greedy_match_count(pred, act, tol):
    pairs = sorted((dist(p, a), i, j) for i, p in enumerate(pred) for j, a in enumerate(act)
                   if dist(p, a) <= tol)
    used_p, used_a, tp = set(), set(), 0
    for _, i, j in pairs:
        if i in used_p or j in used_a:
            continue
        used_p.add(i)
        used_a.add(j)
        tp += 1
    return tp


def max_matching_count(pred, act, tol):
    """Maximum bipartite matching size by augmenting paths."""
    adj = [[j for j, a in enumerate(act) if dist(p, a) <= tol] for p in pred]
    owner = {}

    def augment(i, seen):
        for j in adj[i]:
            if j in seen:
                continue
            seen.add(j)
            if j not in owner or augment(owner[j], seen):
                owner[j] = i
                return True
        return False

    return sum(augment(i, set()) for i in range(len(pred)))


def arc_walk(points, spacing):
    """Points every ``spacing`` meters of path length, plus the final point."""
    out = [tuple(points[0])]
    carried = 0.0
    for a, b in zip(points[:-1], points[1:]):
        seg = dist(a, b)
        pos = spacing - carried
        while pos < seg - 1e-9:
            t = pos / seg
            out.append((a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))
            pos += spacing
        carried = seg - (pos - spacing)
    if dist(out[-1], points[-1]) > 1e-6:
        out.append(tuple(points[-1]))
    return out


def trimmed_mean(values, fraction):
    v = sorted(values)
    k = int(fraction * len(v))
    kept = v[k:len(v) - k] if k else v
    return sum(kept) / len(kept)
