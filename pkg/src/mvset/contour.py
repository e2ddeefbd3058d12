"""Level-set contours of node fields on the grid, and circle comparison.

Marching squares over the cells of a 2d grid.  Segment endpoints live on
grid edges and are keyed by a global edge id, so shared endpoints between
neighboring cells match exactly and chains close without tolerance fuzz.
Traversal order is fixed by sorting edge ids, which makes the output
byte-stable across runs.
"""

from __future__ import annotations

from collections import defaultdict

import numpy as np
from scipy.spatial import cKDTree

# cell corners: A=(i,j) B=(i+1,j) C=(i+1,j+1) D=(i,j+1); edges named by the
# corner pair they join
_AB, _BC, _DC, _AD = 0, 1, 2, 3

_PLAIN_CASES = {
    0: (), 15: (),
    1: ((_AB, _AD),), 14: ((_AB, _AD),),
    2: ((_AB, _BC),), 13: ((_AB, _BC),),
    4: ((_BC, _DC),), 11: ((_BC, _DC),),
    8: ((_DC, _AD),), 7: ((_DC, _AD),),
    3: ((_AD, _BC),), 12: ((_AD, _BC),),
    6: ((_AB, _DC),), 9: ((_AB, _DC),),
}


def _edge_id(i: int, j: int, which: int):
    if which == _AB:
        return (i, j, 0)
    if which == _BC:
        return (i + 1, j, 1)
    if which == _DC:
        return (i, j + 1, 0)
    return (i, j, 1)


def marching_squares(values: np.ndarray, level: float, origin, h: float):
    """Extract the level-set polylines of a 2d node field.

    Returns a list of (k, 2) coordinate arrays.  Closed loops repeat their
    first point at the end.  Nodes with value exactly at the level count as
    below, matching strict thresholding of masks.  Saddle cells are split
    according to the cell-center average.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 2:
        raise ValueError("marching squares needs a 2d field")
    origin = np.asarray(origin, dtype=float)
    nx, ny = v.shape
    above = v > level

    segments = []
    for i in range(nx - 1):
        for j in range(ny - 1):
            code = (int(above[i, j]) | int(above[i + 1, j]) << 1
                    | int(above[i + 1, j + 1]) << 2 | int(above[i, j + 1]) << 3)
            if code == 5 or code == 10:
                center_above = (v[i, j] + v[i + 1, j] + v[i + 1, j + 1]
                                + v[i, j + 1]) / 4.0 > level
                joins_diagonal = (code == 5) == center_above
                if joins_diagonal:
                    pairs = ((_AB, _BC), (_DC, _AD))
                else:
                    pairs = ((_AB, _AD), (_BC, _DC))
            else:
                pairs = _PLAIN_CASES[code]
            for e1, e2 in pairs:
                segments.append((_edge_id(i, j, e1), _edge_id(i, j, e2)))

    def vertex(edge):
        i, j, axis = edge
        di, dj = (1, 0) if axis == 0 else (0, 1)
        v0, v1 = v[i, j], v[i + di, j + dj]
        t = (level - v0) / (v1 - v0)
        t = min(max(t, 0.0), 1.0)
        return (origin[0] + h * (i + t * di), origin[1] + h * (j + t * dj))

    adj = defaultdict(list)
    for e1, e2 in segments:
        adj[e1].append(e2)
        adj[e2].append(e1)

    used = set()

    def walk(start):
        chain = [start]
        cur = start
        while True:
            nxt = None
            for cand in sorted(adj[cur]):
                if frozenset((cur, cand)) not in used:
                    nxt = cand
                    break
            if nxt is None:
                return chain
            used.add(frozenset((cur, nxt)))
            chain.append(nxt)
            cur = nxt

    polylines = []
    endpoints = sorted(e for e, nbrs in adj.items() if len(nbrs) == 1)
    for e in endpoints:
        if all(frozenset((e, n)) in used for n in adj[e]):
            continue
        polylines.append(walk(e))
    for e in sorted(adj):
        if all(frozenset((e, n)) in used for n in adj[e]):
            continue
        polylines.append(walk(e))

    coords = {}
    out = []
    for chain in polylines:
        for e in chain:
            if e not in coords:
                coords[e] = vertex(e)
        out.append(np.array([coords[e] for e in chain]))
    return out


def hausdorff_to_circle(polylines, center, radius: float,
                        samples: int = 2048) -> float:
    """Symmetric Hausdorff distance between polylines and a circle.

    The circle-to-curve direction is evaluated against polyline vertices on a
    dense angular sample; vertices sit at most one cell apart, so the
    overestimate is below half a cell width.
    """
    if not polylines:
        raise ValueError("no polylines to compare")
    pts = np.vstack(polylines)
    center = np.asarray(center, dtype=float)
    rad = np.hypot(pts[:, 0] - center[0], pts[:, 1] - center[1])
    d_curve = float(np.abs(rad - radius).max())
    ang = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    circle = center + radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    d_circle = float(cKDTree(pts).query(circle)[0].max())
    return max(d_curve, d_circle)
