"""Corner extraction and dynamic polygon initialization.

An initial ring is built per region of interest from a building mask and
convex/concave corner heatmaps: the mask outline is traced and simplified,
corner detections are suppressed (NMS) and snapped onto the outline, and
outline corners that no detection accounts for are inserted as missing
corners. The vertex count therefore follows the building, not a fixed budget.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .geometry import as_ring, dp_keep_mask, is_simple, turn_angles
from .raster import as_prob, largest_component, same_shape

KINDS = ("convex", "concave")
SNAP_TIE_TOL = 1e-9


@dataclass(frozen=True)
class Corner:
    x: float
    y: float
    kind: str
    score: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"corner kind must be one of {KINDS}, got {self.kind!r}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"corner score {self.score} outside [0, 1]")
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise ValueError("corner position must be finite")

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class InitConfig:
    epsilon: float = 1.0
    nms_radius: float = 3.0
    missing_dist: float = 3.0
    score_threshold: float = 0.5
    # detections farther than this from the outline are ignored
    max_snap_dist: float = 4.0


def _strict_maxima(grid: np.ndarray) -> np.ndarray:
    padded = np.pad(grid, 1, constant_values=-np.inf)
    h, w = grid.shape
    peak = np.ones(grid.shape, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                peak &= grid > padded[1 + di:1 + di + h, 1 + dj:1 + dj + w]
    return peak


def corners_from_heatmap(convex_map, concave_map, score_threshold: float = 0.5) -> list[Corner]:
    """Strict 8-neighbourhood maxima with value >= ``score_threshold``.

    Corners sit at pixel centres; convex corners come first, each kind in
    raster order.
    """
    if not 0.0 < score_threshold < 1.0:
        raise ValueError("score_threshold must lie in (0, 1)")
    convex, concave = as_prob(convex_map), as_prob(concave_map)
    same_shape(convex, concave, "corner maps")
    out = []
    for kind, grid in (("convex", convex), ("concave", concave)):
        rows, cols = np.nonzero(_strict_maxima(grid) & (grid >= score_threshold))
        out.extend(Corner(c + 0.5, r + 0.5, kind, float(grid[r, c])) for r, c in zip(rows, cols))
    return out


def nms_corners(corners, radius: float) -> list[Corner]:
    """Greedy suppression: keep the best corner, drop everything within ``radius``.

    Candidates are visited by (score desc, y asc, x asc).
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    kept: list[Corner] = []
    for c in sorted(corners, key=lambda c: (-c.score, c.y, c.x)):
        if all((c.x - k.x) ** 2 + (c.y - k.y) ** 2 > radius * radius for k in kept):
            kept.append(c)
    return kept


_E = (1, 0)


def trace_outline(mask) -> np.ndarray:
    """Ordered outer boundary of a mask along pixel edges.

    Follows the crack between foreground and background with the foreground
    on the right, starting at the top-left corner of the first foreground
    pixel in raster order. Diagonal contacts are treated as connected
    (8-connectivity). Vertices are integer lattice points in ring
    coordinates, one per unit step; the result is counter-clockwise.
    """
    m = np.asarray(mask, dtype=bool)
    fg = np.argwhere(m)
    if len(fg) == 0:
        raise GeometryError("cannot trace an empty mask")
    h, w = m.shape
    i0, j0 = fg[0]

    def solid(cx2, cy2):
        # pixel whose centre is (cx2 / 2, cy2 / 2); doubled coordinates keep this integral
        col, row = (cx2 - 1) // 2, (cy2 - 1) // 2
        return 0 <= row < h and 0 <= col < w and m[row, col]

    start = (int(j0), int(i0))
    x, y = start
    dx, dy = _E
    out = []
    while True:
        rx, ry = -dy, dx
        ahead_right = solid(2 * x + dx + rx, 2 * y + dy + ry)
        ahead_left = solid(2 * x + dx - rx, 2 * y + dy - ry)
        if ahead_left:
            dx, dy = dy, -dx
        elif not ahead_right:
            dx, dy = rx, ry
        if (x, y) == start and (dx, dy) == _E and out:
            break
        out.append((x, y))
        x, y = x + dx, y + dy
    return np.array(out, dtype=np.float64)


def _snap(corners, contour, turn, max_dist):
    """Contour index per corner: nearest outline point, preferring sharper turns on ties."""
    snapped: dict[int, float] = {}
    for c in corners:
        d = np.hypot(contour[:, 0] - c.x, contour[:, 1] - c.y)
        dmin = d.min()
        if dmin > max_dist:
            continue
        cand = np.flatnonzero(d <= dmin + SNAP_TIE_TOL)
        k = int(cand[np.argmax(np.abs(turn[cand]))])
        if k not in snapped or c.score > snapped[k]:
            snapped[k] = c.score
    return sorted(snapped)


def init_polygon(mask, corners, cfg: InitConfig = InitConfig()) -> np.ndarray:
    """Initial ring for the largest 8-connected component of ``mask``.

    Raises :class:`GeometryError` for an empty mask or when even the
    simplified outline has fewer than 3 vertices. If the fused ring is
    degenerate or self-intersecting the simplified outline is returned.
    """
    comp = largest_component(mask)
    if not comp.any():
        raise GeometryError("mask has no foreground")
    contour = trace_outline(comp)
    simple_idx = np.flatnonzero(dp_keep_mask(contour, cfg.epsilon, closed=True))
    simplified = contour[simple_idx]

    turn = turn_angles(contour)
    kept = nms_corners(corners, cfg.nms_radius) if corners else []
    snapped = _snap(kept, contour, turn, cfg.max_snap_dist)

    idx = list(snapped)
    if snapped:
        anchor = contour[snapped]
        for s in simple_idx:
            if np.hypot(*(anchor - contour[s]).T).min() > cfg.missing_dist:
                idx.append(int(s))
    else:
        idx.extend(int(s) for s in simple_idx)
    ring = contour[sorted(set(idx))]

    if len(ring) < 3 or not is_simple(ring):
        ring = simplified
    if len(ring) < 3:
        raise GeometryError("outline degenerates to fewer than 3 vertices")
    return as_ring(ring)


def roi_slices(box, shape, margin: int = 2):
    """Row/column slices for a pixel box ``(x0, y0, x1, y1)`` grown by ``margin``."""
    x0, y0, x1, y1 = box
    h, w = shape
    r0 = max(int(np.floor(y0)) - margin, 0)
    c0 = max(int(np.floor(x0)) - margin, 0)
    r1 = min(int(np.ceil(y1)) + margin, h)
    c1 = min(int(np.ceil(x1)) + margin, w)
    return slice(r0, r1), slice(c0, c1)


def init_in_box(mask, convex_map, concave_map, box, cfg: InitConfig = InitConfig(), margin: int = 2):
    """Run corner extraction and :func:`init_polygon` inside one region of interest."""
    rs, cs = roi_slices(box, np.shape(mask), margin)
    corners = corners_from_heatmap(convex_map[rs, cs], concave_map[rs, cs], cfg.score_threshold)
    ring = init_polygon(np.asarray(mask)[rs, cs], corners, cfg)
    return ring + np.array([cs.start, rs.start], dtype=np.float64)
