"""Exact 2-D polygon primitives.

Rings are ``(n, 2)`` float64 arrays of ``(x, y)`` pixel coordinates, implicitly
closed (the last vertex connects to the first). "Counter-clockwise" means a
positive shoelace area with the coordinates taken literally.
"""
from __future__ import annotations

import math

import numpy as np

from . import _backend
from .errors import GeometryError

DUPLICATE_TOL = 1e-9


def as_points(points) -> np.ndarray:
    arr = np.array(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise GeometryError(f"expected an (n, 2) array of points, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise GeometryError("coordinates must be finite")
    return arr


def as_ring(vertices, normalize: bool = True) -> np.ndarray:
    """Validate ``vertices`` as a polygon ring.

    Drops an explicit closing vertex, collapses consecutive duplicates (within
    ``DUPLICATE_TOL``) and, when ``normalize`` is set, reorders to
    counter-clockwise while keeping vertex 0 first.
    """
    arr = as_points(vertices)
    if len(arr) > 1 and np.all(np.abs(arr[0] - arr[-1]) <= DUPLICATE_TOL):
        arr = arr[:-1]
    if len(arr) > 1:
        step = np.abs(np.diff(arr, axis=0)).max(axis=1)
        arr = np.concatenate([arr[:1], arr[1:][step > DUPLICATE_TOL]])
        while len(arr) > 1 and np.all(np.abs(arr[0] - arr[-1]) <= DUPLICATE_TOL):
            arr = arr[:-1]
    if len(arr) < 3:
        raise GeometryError(f"a ring needs at least 3 distinct vertices, got {len(arr)}")
    if normalize and signed_area(arr) < 0:
        arr = reverse_ring(arr)
    return arr


def reverse_ring(ring) -> np.ndarray:
    """Opposite orientation, same starting vertex."""
    ring = np.asarray(ring, dtype=np.float64)
    return np.concatenate([ring[:1], ring[:0:-1]])


def signed_area(ring) -> float:
    r = np.asarray(ring, dtype=np.float64)
    x, y = r[:, 0], r[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * float(np.sum(x * yn - xn * y))


def perimeter(ring) -> float:
    r = np.asarray(ring, dtype=np.float64)
    return float(np.hypot(*(np.roll(r, -1, axis=0) - r).T).sum())


def ring_edges(ring) -> tuple[np.ndarray, np.ndarray]:
    """Edge start and end points; edge ``i`` runs from vertex ``i`` to ``i + 1``."""
    r = np.asarray(ring, dtype=np.float64)
    return r, np.roll(r, -1, axis=0)


def _orient(px, py, qx, qy, rx, ry):
    return (qx - px) * (ry - py) - (qy - py) * (rx - px)


def _within(ax, ay, bx, by, px, py):
    # p assumed collinear with a-b
    return (
        (np.minimum(ax, bx) <= px) & (px <= np.maximum(ax, bx))
        & (np.minimum(ay, by) <= py) & (py <= np.maximum(ay, by))
    )


def segments_intersect(a1, a2, b1, b2):
    """Closed-segment intersection test, vectorised over leading axes."""
    a1x, a1y = a1[..., 0], a1[..., 1]
    a2x, a2y = a2[..., 0], a2[..., 1]
    b1x, b1y = b1[..., 0], b1[..., 1]
    b2x, b2y = b2[..., 0], b2[..., 1]
    o1 = _orient(a1x, a1y, a2x, a2y, b1x, b1y)
    o2 = _orient(a1x, a1y, a2x, a2y, b2x, b2y)
    o3 = _orient(b1x, b1y, b2x, b2y, a1x, a1y)
    o4 = _orient(b1x, b1y, b2x, b2y, a2x, a2y)
    proper = (np.sign(o1) * np.sign(o2) < 0) & (np.sign(o3) * np.sign(o4) < 0)
    touch = (
        ((o1 == 0) & _within(a1x, a1y, a2x, a2y, b1x, b1y))
        | ((o2 == 0) & _within(a1x, a1y, a2x, a2y, b2x, b2y))
        | ((o3 == 0) & _within(b1x, b1y, b2x, b2y, a1x, a1y))
        | ((o4 == 0) & _within(b1x, b1y, b2x, b2y, a2x, a2y))
    )
    return proper | touch


def is_simple(ring) -> bool:
    """True iff no two non-adjacent edges meet and no adjacent edges overlap."""
    r = np.asarray(ring, dtype=np.float64)
    n = len(r)
    if n < 3:
        return False
    a, b = ring_edges(r)
    if np.any(np.all(a == b, axis=1)):
        return False
    # adjacent edges i-1, i overlap only if they fold back on each other
    ein = a - np.roll(a, 1, axis=0)
    eout = b - a
    cross = ein[:, 0] * eout[:, 1] - ein[:, 1] * eout[:, 0]
    dot = ein[:, 0] * eout[:, 0] + ein[:, 1] * eout[:, 1]
    if np.any((cross == 0) & (dot < 0)):
        return False
    if n == 3:
        return True
    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))
    i, j = i[keep], j[keep]
    return not bool(np.any(segments_intersect(a[i], b[i], a[j], b[j])))


def closest_points_on_ring(points, ring):
    """Vectorised :func:`closest_point_on_ring`: ``(feet, edge_indices, distances)``."""
    a, b = ring_edges(ring)
    foot, idx, d2 = _backend.nearest_on_segments(np.asarray(points, dtype=np.float64), a, b)
    return foot, idx, np.sqrt(d2)


def closest_point_on_ring(p, ring):
    """Nearest point on the ring boundary to ``p``.

    Returns ``(point, edge_index, distance)``; exact ties go to the lowest
    edge index.
    """
    foot, idx, dist = closest_points_on_ring(np.asarray(p, dtype=np.float64).reshape(1, 2), ring)
    return foot[0], int(idx[0]), float(dist[0])


def point_segment_distance(p, a, b) -> np.ndarray:
    """Distance from each point in ``p`` to the closed segment ``a``-``b``."""
    p = np.asarray(p, dtype=np.float64).reshape(-1, 2)
    d = np.asarray(b, dtype=np.float64) - np.asarray(a, dtype=np.float64)
    l2 = float(d @ d)
    rel = p - a
    if l2 == 0.0:
        return np.hypot(rel[:, 0], rel[:, 1])
    t = np.clip(rel @ d / l2, 0.0, 1.0)
    e = rel - t[:, None] * d
    return np.hypot(e[:, 0], e[:, 1])


def _dp_keep(pts: np.ndarray, epsilon: float) -> np.ndarray:
    n = len(pts)
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        i, j = stack.pop()
        if j <= i + 1:
            continue
        d = point_segment_distance(pts[i + 1:j], pts[i], pts[j])
        k = int(np.argmax(d))
        if d[k] > epsilon:
            k += i + 1
            keep[k] = True
            stack.append((i, k))
            stack.append((k, j))
    return keep


def diameter_pair(points) -> tuple[int, int]:
    """Indices ``i < j`` of the two points farthest apart (first pair on ties)."""
    p = np.asarray(points, dtype=np.float64)
    diff = p[:, None, :] - p[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    i, j = np.unravel_index(int(np.argmax(d2)), d2.shape)
    return (int(i), int(j)) if i < j else (int(j), int(i))


def dp_keep_mask(points, epsilon: float, closed: bool = False) -> np.ndarray:
    """Boolean mask of the points kept by :func:`simplify_dp`."""
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    if n <= (3 if closed else 2):
        return np.ones(n, dtype=bool)
    if not closed:
        return _dp_keep(pts, epsilon)
    i, j = diameter_pair(pts)
    keep = np.zeros(n, dtype=bool)
    keep[i:j + 1] |= _dp_keep(pts[i:j + 1], epsilon)
    order = np.concatenate([np.arange(j, n), np.arange(0, i + 1)])
    keep[order] |= _dp_keep(pts[order], epsilon)
    return keep


def simplify_dp(points, epsilon: float, closed: bool = False) -> np.ndarray:
    """Douglas-Peucker simplification.

    Every dropped point lies within ``epsilon`` of the kept chain (segment
    distance). Open polylines keep both endpoints. Closed rings are split at
    their diameter pair and both halves simplified; the result keeps the
    input's cyclic order starting from the lowest kept index. A ring may come
    back with fewer than 3 vertices when it is degenerate at this tolerance.
    """
    pts = np.asarray(points, dtype=np.float64)
    return pts[dp_keep_mask(pts, epsilon, closed)]


def turn_angles(ring) -> np.ndarray:
    """Signed exterior turn angle at every vertex, degrees in (-180, 180].

    Positive is a left turn, i.e. a convex vertex of a counter-clockwise ring.
    """
    r = np.asarray(ring, dtype=np.float64)
    ein = r - np.roll(r, 1, axis=0)
    eout = np.roll(r, -1, axis=0) - r
    cross = ein[:, 0] * eout[:, 1] - ein[:, 1] * eout[:, 0]
    dot = ein[:, 0] * eout[:, 0] + ein[:, 1] * eout[:, 1]
    ang = np.degrees(np.arctan2(cross, dot))
    return np.where(ang == -180.0, 180.0, ang)


def turn_angle(ring, i: int) -> float:
    return float(turn_angles(ring)[i % len(ring)])


def rotate(points, angle_deg: float, center=(0.0, 0.0)) -> np.ndarray:
    c = np.asarray(center, dtype=np.float64)
    t = math.radians(angle_deg)
    rot = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
    return (np.asarray(points, dtype=np.float64) - c) @ rot.T + c
