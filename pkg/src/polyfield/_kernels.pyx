# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Semantics are defined by ``_kernels_py``; keep the two in step."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


def nearest_on_segments(points, seg_a, seg_b):
    cdef double[:, ::1] p = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 2)
    cdef double[:, ::1] a = np.ascontiguousarray(seg_a, dtype=np.float64).reshape(-1, 2)
    cdef double[:, ::1] b = np.ascontiguousarray(seg_b, dtype=np.float64).reshape(-1, 2)
    cdef Py_ssize_t m = p.shape[0], k = a.shape[0], i, s, best_s
    if k == 0:
        raise ValueError("no segments")
    foot_arr = np.empty((m, 2))
    index_arr = np.empty(m, dtype=np.intp)
    dist_arr = np.empty(m)
    cdef double[:, ::1] foot = foot_arr
    cdef Py_ssize_t[::1] index = index_arr
    cdef double[::1] dist2 = dist_arr
    cdef double[::1] dx = np.empty(k), dy = np.empty(k), l2 = np.empty(k)
    cdef double px, py, t, fx, fy, ex, ey, d2, best, bfx, bfy
    for s in range(k):
        dx[s] = b[s, 0] - a[s, 0]
        dy[s] = b[s, 1] - a[s, 1]
        l2[s] = dx[s] * dx[s] + dy[s] * dy[s]
    with nogil:
        for i in range(m):
            px = p[i, 0]
            py = p[i, 1]
            best = 0.0
            best_s = -1
            bfx = 0.0
            bfy = 0.0
            for s in range(k):
                if l2[s] > 0.0:
                    t = ((px - a[s, 0]) * dx[s] + (py - a[s, 1]) * dy[s]) / l2[s]
                else:
                    t = 0.0
                if t < 0.0:
                    t = 0.0
                if t > 1.0:
                    t = 1.0
                fx = a[s, 0] + t * dx[s]
                fy = a[s, 1] + t * dy[s]
                ex = px - fx
                ey = py - fy
                d2 = ex * ex + ey * ey
                if best_s < 0 or d2 < best:
                    best = d2
                    best_s = s
                    bfx = fx
                    bfy = fy
            foot[i, 0] = bfx
            foot[i, 1] = bfy
            index[i] = best_s
            dist2[i] = best
    return foot_arr, index_arr, dist_arr


def rasterize(vertices, Py_ssize_t height, Py_ssize_t width):
    cdef double[:, ::1] v = np.ascontiguousarray(vertices, dtype=np.float64).reshape(-1, 2)
    cdef Py_ssize_t n = v.shape[0], i, j, k
    out_arr = np.zeros((height, width), dtype=np.uint8)
    cdef unsigned char[:, ::1] out = out_arr
    cdef double px, py, ax, ay, bx, by, xint, cross
    cdef bint inside, on_edge
    with nogil:
        for i in range(height):
            py = i + 0.5
            for j in range(width):
                px = j + 0.5
                inside = False
                on_edge = False
                for k in range(n):
                    ax = v[k, 0]
                    ay = v[k, 1]
                    bx = v[(k + 1) % n, 0]
                    by = v[(k + 1) % n, 1]
                    if ((ay > py) != (by > py)) and ay != by:
                        xint = ax + (py - ay) * (bx - ax) / (by - ay)
                        if px < xint:
                            inside = not inside
                    if not on_edge:
                        cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
                        if (cross == 0.0
                                and px >= (ax if ax < bx else bx) and px <= (bx if ax < bx else ax)
                                and py >= (ay if ay < by else by) and py <= (by if ay < by else ay)):
                            on_edge = True
                if inside or on_edge:
                    out[i, j] = 1
    return out_arr


def bilinear(grid, points):
    cdef double[:, :, ::1] g = np.ascontiguousarray(grid, dtype=np.float64)
    cdef double[:, ::1] p = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 2)
    cdef Py_ssize_t h = g.shape[0], w = g.shape[1], nc = g.shape[2], m = p.shape[0]
    vals_arr = np.empty((m, nc))
    gx_arr = np.empty((m, nc))
    gy_arr = np.empty((m, nc))
    cdef double[:, ::1] vals = vals_arr, gx = gx_arr, gy = gy_arr
    cdef Py_ssize_t i, c, x0, x1, y0, y1
    cdef double x, y, u, v, fx, fy, g00, g01, g10, g11
    cdef bint live_x, live_y
    with nogil:
        for i in range(m):
            x = p[i, 0]
            y = p[i, 1]
            u = x if x > 0.0 else 0.0
            if u > w - 1.0:
                u = w - 1.0
            v = y if y > 0.0 else 0.0
            if v > h - 1.0:
                v = h - 1.0
            if w > 1:
                x0 = <Py_ssize_t>floor(u)
                if x0 > w - 2:
                    x0 = w - 2
                x1 = x0 + 1
            else:
                x0 = 0
                x1 = 0
            if h > 1:
                y0 = <Py_ssize_t>floor(v)
                if y0 > h - 2:
                    y0 = h - 2
                y1 = y0 + 1
            else:
                y0 = 0
                y1 = 0
            fx = u - <double>x0
            fy = v - <double>y0
            live_x = x >= 0.0 and x <= w - 1.0 and w > 1
            live_y = y >= 0.0 and y <= h - 1.0 and h > 1
            for c in range(nc):
                g00 = g[y0, x0, c]
                g01 = g[y0, x1, c]
                g10 = g[y1, x0, c]
                g11 = g[y1, x1, c]
                vals[i, c] = (1.0 - fy) * ((1.0 - fx) * g00 + fx * g01) + fy * ((1.0 - fx) * g10 + fx * g11)
                gx[i, c] = (1.0 - fy) * (g01 - g00) + fy * (g11 - g10) if live_x else 0.0
                gy[i, c] = (1.0 - fx) * (g10 - g00) + fx * (g11 - g01) if live_y else 0.0
    return vals_arr, gx_arr, gy_arr


def afm_votes(field, double tol):
    cdef double[:, :, ::1] f = np.ascontiguousarray(field, dtype=np.float64)
    cdef Py_ssize_t h = f.shape[0], w = f.shape[1], i, j, r, c, r0, r1, c0, c1
    counts_arr = np.zeros((h, w), dtype=np.int64)
    cdef long long[:, ::1] counts = counts_arr
    cdef double bx, by
    with nogil:
        for i in range(h):
            for j in range(w):
                bx = j + 0.5 + f[i, j, 0]
                by = i + 0.5 + f[i, j, 1]
                c0 = <Py_ssize_t>floor(bx - tol)
                c1 = <Py_ssize_t>floor(bx + tol)
                r0 = <Py_ssize_t>floor(by - tol)
                r1 = <Py_ssize_t>floor(by + tol)
                for r in range(r0, r1 + 1):
                    if r < 0 or r >= h:
                        continue
                    for c in range(c0, c1 + 1):
                        if c < 0 or c >= w:
                            continue
                        counts[r, c] += 1
    return counts_arr
