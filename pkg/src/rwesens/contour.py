"""Marching-squares level extraction on rectangular grids."""

from __future__ import annotations

import numpy as np

# Edges of a cell, corners ordered (0,0) (1,0) (1,1) (0,1) counter-clockwise:
# 0 = bottom, 1 = right, 2 = top, 3 = left.
_EDGE_CORNERS = ((0, 1), (1, 2), (2, 3), (3, 0))

# Segments per corner bitmask (bit k set when corner k is above the level).
_CASES: dict[int, tuple[tuple[int, int], ...]] = {
    0: (), 15: (),
    1: ((3, 0),), 14: ((3, 0),),
    2: ((0, 1),), 13: ((0, 1),),
    3: ((3, 1),), 12: ((3, 1),),
    4: ((1, 2),), 11: ((1, 2),),
    6: ((0, 2),), 9: ((0, 2),),
    7: ((3, 2),), 8: ((3, 2),),
}


def _interp(p0, p1, v0, v1, level):
    t = (level - v0) / (v1 - v0)
    return (p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1]))


def segments(x: np.ndarray, y: np.ndarray, values: np.ndarray, level: float) -> list[tuple[tuple[float, float], tuple[float, float]]]:
    """Line segments where ``values`` crosses ``level``.

    ``values[i, j]`` is the surface at ``(x[i], y[j])``.  Crossing points are
    linearly interpolated along cell edges; saddle cells are resolved by the
    mean of the four corners.  Output order is deterministic (cells scanned
    with ``i`` outer, ``j`` inner).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    v = np.asarray(values, dtype=float)
    if v.shape != (len(x), len(y)) or len(x) < 2 or len(y) < 2:
        raise ValueError("surface must be len(x) by len(y) with at least 2 points per axis")
    out = []
    above = v > level
    for i in range(len(x) - 1):
        for j in range(len(y) - 1):
            corners = ((i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1))
            mask = sum(1 << k for k, (a, b) in enumerate(corners) if above[a, b])
            if mask in (0, 15):
                continue
            cv = [v[a, b] for a, b in corners]
            pts = [(x[a], y[b]) for a, b in corners]

            def edge_point(e):
                c0, c1 = _EDGE_CORNERS[e]
                return _interp(pts[c0], pts[c1], cv[c0], cv[c1], level)

            if mask in (5, 10):
                centre_above = float(np.mean(cv)) > level
                # corners 0 and 2 share state for mask 5, corners 1 and 3 for mask 10
                if (mask == 5) == centre_above:
                    pairs = ((0, 1), (2, 3))
                else:
                    pairs = ((3, 0), (1, 2))
            else:
                pairs = _CASES[mask]
            for e0, e1 in pairs:
                out.append((edge_point(e0), edge_point(e1)))
    return out


def polylines(x, y, values, level) -> list[list[tuple[float, float]]]:
    """Join the marching-squares segments into polylines.

    Points are matched after rounding relative to the grid span, so a level
    running exactly through grid nodes still joins up; zero-length and
    repeated segments (both arise at such nodes) are dropped.
    """
    sx = float(np.ptp(x)) or 1.0
    sy = float(np.ptp(y)) or 1.0

    def _key(p):
        return (round(p[0] / sx, 9), round(p[1] / sy, 9))

    segs, seen = [], set()
    for a, b in segments(x, y, values, level):
        ka, kb = _key(a), _key(b)
        if ka == kb or (ka, kb) in seen or (kb, ka) in seen:
            continue
        seen.add((ka, kb))
        segs.append((a, b))
    if not segs:
        return []
    adj: dict[tuple, list[int]] = {}
    for k, (a, b) in enumerate(segs):
        adj.setdefault(_key(a), []).append(k)
        adj.setdefault(_key(b), []).append(k)
    used = [False] * len(segs)
    lines = []

    def walk(start_seg, start_pt):
        line = [start_pt]
        seg, pt = start_seg, start_pt
        while True:
            used[seg] = True
            a, b = segs[seg]
            nxt = b if _key(a) == _key(pt) else a
            line.append(nxt)
            cands = [s for s in adj[_key(nxt)] if not used[s]]
            if not cands:
                return line
            seg, pt = cands[0], nxt

    # open chains first start at endpoints of degree 1
    for k, (a, b) in enumerate(segs):
        if used[k]:
            continue
        if len(adj[_key(a)]) == 1:
            lines.append(walk(k, a))
        elif len(adj[_key(b)]) == 1:
            lines.append(walk(k, b))
    for k, (a, _) in enumerate(segs):
        if not used[k]:
            lines.append(walk(k, a))
    return lines


def bilinear(x, y, values, px: float, py: float) -> float:
    """Bilinear interpolation of a grid surface at ``(px, py)`` (clamped to the grid)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    i = int(np.clip(np.searchsorted(x, px, side="right") - 1, 0, len(x) - 2))
    j = int(np.clip(np.searchsorted(y, py, side="right") - 1, 0, len(y) - 2))
    tx = (px - x[i]) / (x[i + 1] - x[i])
    ty = (py - y[j]) / (y[j + 1] - y[j])
    tx, ty = min(max(tx, 0.0), 1.0), min(max(ty, 0.0), 1.0)
    v = values
    return float((1 - tx) * (1 - ty) * v[i, j] + tx * (1 - ty) * v[i + 1, j]
                 + tx * ty * v[i + 1, j + 1] + (1 - tx) * ty * v[i, j + 1])
