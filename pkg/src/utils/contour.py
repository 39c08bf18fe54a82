from collections import defaultdict
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

Point = Tuple[float, float]
Node = Tuple[int, int]
EdgeKey = Tuple[Node, Node]

# Corners: 0 = (i, j), 1 = (i+1, j), 2 = (i+1, j+1), 3 = (i, j+1); bit 3 is corner 0.
# Saddle cases carry two options, picked by the sign of the centre sample.
MARCHING_SQUARES_TABLE = [
    (False, []),  # 0000
    (False, [((0, 3), (2, 3))]),  # 0001
    (False, [((1, 2), (2, 3))]),  # 0010
    (False, [((0, 3), (1, 2))]),  # 0011
    (False, [((0, 1), (1, 2))]),  # 0100
    (True, ([((0, 1), (1, 2)), ((0, 3), (2, 3))], [((0, 1), (0, 3)), ((1, 2), (2, 3))])),  # 0101
    (False, [((0, 1), (2, 3))]),  # 0110
    (False, [((0, 1), (0, 3))]),  # 0111
    (False, [((0, 1), (0, 3))]),  # 1000
    (False, [((0, 1), (2, 3))]),  # 1001
    (True, ([((0, 1), (0, 3)), ((1, 2), (2, 3))], [((0, 1), (1, 2)), ((0, 3), (2, 3))])),  # 1010
    (False, [((0, 1), (1, 2))]),  # 1011
    (False, [((0, 3), (1, 2))]),  # 1100
    (False, [((1, 2), (2, 3))]),  # 1101
    (False, [((0, 3), (2, 3))]),  # 1110
    (False, []),  # 1111
]

# Locates the zero on the edge p0 -> p1 given the end values; None drops the point.
CrossingLocator = Callable[[Point, Point, float, float], Optional[Point]]


def values_to_index(values: Sequence[float]) -> int:
    n = 0
    for v in values:
        if v > 0:
            n += 1
        n = n << 1
    return n >> 1


def lerp_point(p0: Point, p1: Point, v0: float, v1: float) -> Point:
    t = v0 / (v0 - v1)
    t = min(max(t, 0.0), 1.0)
    return p0[0] * (1 - t) + t * p1[0], p0[1] * (1 - t) + t * p1[1]


def _cell_segments(
    xs: np.ndarray,
    ys: np.ndarray,
    values: np.ndarray,
    center: Optional[Callable[[float, float], float]],
) -> List[Tuple[EdgeKey, EdgeKey]]:
    """Marching-squares segments of every grid cell, as pairs of crossed grid edges."""
    positive = values > 0
    corners_up = positive[:-1, :-1].astype(int) + positive[:-1, 1:] + positive[1:, 1:] + positive[1:, :-1]
    mixed_j, mixed_i = np.nonzero((corners_up > 0) & (corners_up < 4))

    segments = []
    for j, i in zip(mixed_j.tolist(), mixed_i.tolist()):
        nodes = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]
        samples = [values[j, i], values[j, i + 1], values[j + 1, i + 1], values[j + 1, i]]
        saddle, edges = MARCHING_SQUARES_TABLE[values_to_index(samples)]
        if saddle:
            xc, yc = 0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])
            centre_value = center(xc, yc) if center is not None else float(np.mean(samples))
            edges = edges[int(centre_value > 0)]
        for (i0, i1), (k0, k1) in edges:
            a = tuple(sorted((nodes[i0], nodes[i1])))
            b = tuple(sorted((nodes[k0], nodes[k1])))
            segments.append((a, b))
    return segments


def _chain(segments: List[Tuple[EdgeKey, EdgeKey]]) -> List[List[EdgeKey]]:
    """Joins segments sharing a grid edge into ordered chains; loops repeat their first key."""
    adjacency: Dict[EdgeKey, List[int]] = defaultdict(list)
    for index, (a, b) in enumerate(segments):
        adjacency[a].append(index)
        adjacency[b].append(index)

    used = [False] * len(segments)

    def walk(start: EdgeKey) -> List[EdgeKey]:
        path = [start]
        current = start
        while True:
            nxt = next((s for s in adjacency[current] if not used[s]), None)
            if nxt is None:
                return path
            used[nxt] = True
            a, b = segments[nxt]
            current = b if a == current else a
            path.append(current)

    chains = []
    keys = sorted(adjacency)
    # Open chains first, starting from their free ends
    for key in keys:
        if len(adjacency[key]) == 1 and not used[adjacency[key][0]]:
            chains.append(walk(key))
    for key in keys:
        if any(not used[s] for s in adjacency[key]):
            chains.append(walk(key))
    return chains


def extract_contours(
    xs: Sequence[float],
    ys: Sequence[float],
    values: np.ndarray,
    locate: Optional[CrossingLocator] = None,
    center: Optional[Callable[[float, float], float]] = None,
) -> List[List[Point]]:
    """
    Zero level set of a function sampled on a grid, as polylines.

    Args:
        xs: Node coordinates along the first axis (columns of values).
        ys: Node coordinates along the second axis (rows of values).
        values: Samples with shape (len(ys), len(xs)).
        locate: Places the zero on a crossed edge; linear interpolation if None.
            Returning None drops that point and splits its polyline.
        center: Function used to resolve saddle cells; corner mean if None.

    Returns:
        Polylines as lists of (x, y) points, each with at least two points.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    values = np.asarray(values, dtype=float)
    segments = _cell_segments(xs, ys, values, center)

    cache: Dict[EdgeKey, Optional[Point]] = {}

    def point_on(key: EdgeKey) -> Optional[Point]:
        if key not in cache:
            (i0, j0), (i1, j1) = key
            p0, p1 = (float(xs[i0]), float(ys[j0])), (float(xs[i1]), float(ys[j1]))
            v0, v1 = float(values[j0, i0]), float(values[j1, i1])
            cache[key] = locate(p0, p1, v0, v1) if locate is not None else lerp_point(p0, p1, v0, v1)
        return cache[key]

    polylines = []
    for chain in _chain(segments):
        run: List[Point] = []
        for key in chain:
            point = point_on(key)
            if point is None:
                if len(run) >= 2:
                    polylines.append(run)
                run = []
            else:
                run.append(point)
        if len(run) >= 2:
            polylines.append(run)
    return polylines
