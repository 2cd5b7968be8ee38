"""Pure numpy implementations of the hot kernels.

These mirror ``_kernels.pyx`` operation for operation so that both backends
produce the same floating point results (same expression order, first-index
tie breaking). The compiled module is preferred when it is importable.
"""
import numpy as np

_CHUNK = 4096


def nearest_on_segments(points, seg_a, seg_b):
    """Nearest point on a set of segments for every query point.

    Returns ``(foot, index, dist2)``: the closest point, the index of the
    segment that contains it (lowest index on exact ties) and the squared
    distance.
    """
    points = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 2)
    seg_a = np.ascontiguousarray(seg_a, dtype=np.float64).reshape(-1, 2)
    seg_b = np.ascontiguousarray(seg_b, dtype=np.float64).reshape(-1, 2)
    m = points.shape[0]
    foot = np.empty((m, 2))
    index = np.empty(m, dtype=np.intp)
    dist2 = np.empty(m)
    if seg_a.shape[0] == 0:
        raise ValueError("no segments")

    ax, ay = seg_a[:, 0], seg_a[:, 1]
    dx = seg_b[:, 0] - ax
    dy = seg_b[:, 1] - ay
    l2 = dx * dx + dy * dy
    safe = np.where(l2 > 0.0, l2, 1.0)
    for start in range(0, m, _CHUNK):
        px = points[start:start + _CHUNK, 0:1]
        py = points[start:start + _CHUNK, 1:2]
        t = ((px - ax) * dx + (py - ay) * dy) / safe
        t = np.where(l2 > 0.0, t, 0.0)
        t = np.where(t < 0.0, 0.0, t)
        t = np.where(t > 1.0, 1.0, t)
        fx = ax + t * dx
        fy = ay + t * dy
        ex = px - fx
        ey = py - fy
        d2 = ex * ex + ey * ey
        k = np.argmin(d2, axis=1)
        rows = np.arange(k.shape[0])
        stop = start + k.shape[0]
        index[start:stop] = k
        dist2[start:stop] = d2[rows, k]
        foot[start:stop, 0] = fx[rows, k]
        foot[start:stop, 1] = fy[rows, k]
    return foot, index, dist2


def rasterize(vertices, height, width):
    """Even-odd fill of pixel centres; centres exactly on an edge count as inside."""
    v = np.ascontiguousarray(vertices, dtype=np.float64).reshape(-1, 2)
    n = v.shape[0]
    px = (np.arange(width, dtype=np.float64) + 0.5)[None, :]
    py = (np.arange(height, dtype=np.float64) + 0.5)[:, None]
    inside = np.zeros((height, width), dtype=bool)
    on_edge = np.zeros((height, width), dtype=bool)
    for k in range(n):
        ax, ay = v[k]
        bx, by = v[(k + 1) % n]
        straddle = (ay > py) != (by > py)
        if ay != by:
            xint = ax + (py - ay) * (bx - ax) / (by - ay)
            inside ^= straddle & (px < xint)
        cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        on_edge |= (
            (cross == 0.0)
            & (px >= min(ax, bx)) & (px <= max(ax, bx))
            & (py >= min(ay, by)) & (py <= max(ay, by))
        )
    return (inside | on_edge).astype(np.uint8)


def bilinear(grid, points):
    """Bilinear sample of an (H, W, C) grid at index coordinates (x=col, y=row).

    Coordinates are clamped to the grid. Returns values and their partial
    derivatives with respect to x and y (zero along a clamped axis).
    """
    grid = np.ascontiguousarray(grid, dtype=np.float64)
    h, w, _ = grid.shape
    points = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 2)
    x = points[:, 0]
    y = points[:, 1]
    u = np.minimum(np.maximum(x, 0.0), w - 1.0)
    v = np.minimum(np.maximum(y, 0.0), h - 1.0)
    if w > 1:
        x0 = np.minimum(np.floor(u).astype(np.intp), w - 2)
        x1 = x0 + 1
    else:
        x0 = np.zeros(u.shape, dtype=np.intp)
        x1 = x0
    if h > 1:
        y0 = np.minimum(np.floor(v).astype(np.intp), h - 2)
        y1 = y0 + 1
    else:
        y0 = np.zeros(v.shape, dtype=np.intp)
        y1 = y0
    fx = (u - x0)[:, None]
    fy = (v - y0)[:, None]
    g00 = grid[y0, x0]
    g01 = grid[y0, x1]
    g10 = grid[y1, x0]
    g11 = grid[y1, x1]
    vals = (1.0 - fy) * ((1.0 - fx) * g00 + fx * g01) + fy * ((1.0 - fx) * g10 + fx * g11)
    gx = (1.0 - fy) * (g01 - g00) + fy * (g11 - g10)
    gy = (1.0 - fx) * (g10 - g00) + fx * (g11 - g01)
    live_x = ((x >= 0.0) & (x <= w - 1.0) & (w > 1))[:, None]
    live_y = ((y >= 0.0) & (y <= h - 1.0) & (h > 1))[:, None]
    gx = np.where(live_x, gx, 0.0)
    gy = np.where(live_y, gy, 0.0)
    return vals, gx, gy


def afm_votes(field, tol):
    """Count landing points ``centre + vector`` per pixel.

    A landing point within ``tol`` of a pixel border votes for every pixel
    sharing that border.
    """
    field = np.ascontiguousarray(field, dtype=np.float64)
    h, w, _ = field.shape
    jj, ii = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    bx = (jj + 0.5 + field[:, :, 0]).ravel()
    by = (ii + 0.5 + field[:, :, 1]).ravel()
    c0 = np.floor(bx - tol).astype(np.int64)
    c1 = np.floor(bx + tol).astype(np.int64)
    r0 = np.floor(by - tol).astype(np.int64)
    r1 = np.floor(by + tol).astype(np.int64)
    counts = np.zeros((h, w), dtype=np.int64)
    for rr, cc, keep in (
        (r0, c0, np.ones_like(c0, dtype=bool)),
        (r0, c1, c1 != c0),
        (r1, c0, r1 != r0),
        (r1, c1, (r1 != r0) & (c1 != c0)),
    ):
        ok = keep & (rr >= 0) & (rr < h) & (cc >= 0) & (cc < w)
        np.add.at(counts, (rr[ok], cc[ok]), 1)
    return counts
