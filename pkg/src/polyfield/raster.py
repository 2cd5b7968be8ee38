"""Masks, probability and feature grids, sampling and rasterization.

Pixel ``(i, j)`` (row, column) has its centre at ``(x, y) = (j + 0.5, i + 0.5)``
in ring coordinates. ``bilinear_sample`` works in grid-index coordinates,
where the value of cell ``(i, j)`` sits exactly at ``(x, y) = (j, i)``;
``sample_at`` converts from ring coordinates.
"""
from __future__ import annotations

import numpy as np
from scipy import ndimage

from . import _backend
from .errors import DimensionError

_EIGHT = np.ones((3, 3), dtype=bool)


def as_mask(a) -> np.ndarray:
    m = np.asarray(a)
    if m.ndim != 2 or min(m.shape) < 1:
        raise DimensionError(f"mask must be a non-empty 2-D grid, got shape {m.shape}")
    return m.astype(bool, copy=False)


def as_prob(a) -> np.ndarray:
    p = np.asarray(a, dtype=np.float64)
    if p.ndim != 2 or min(p.shape) < 1:
        raise DimensionError(f"probability grid must be 2-D, got shape {p.shape}")
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise ValueError("probability values must lie in [0, 1]")
    return p


def as_features(a) -> np.ndarray:
    """Coerce to an ``(H, W, C)`` float grid; a 2-D input becomes one channel."""
    f = np.asarray(a, dtype=np.float64)
    if f.ndim == 2:
        f = f[:, :, None]
    if f.ndim != 3 or min(f.shape) < 1:
        raise DimensionError(f"feature grid must be (H, W, C), got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("feature values must be finite")
    return f


def same_shape(a, b, what="grids"):
    if np.shape(a)[:2] != np.shape(b)[:2]:
        raise DimensionError(f"{what} differ in size: {np.shape(a)[:2]} vs {np.shape(b)[:2]}")


def bilinear_sample(grid, p) -> np.ndarray:
    """Interpolate the C channels of ``grid`` at index coordinates ``p = (x, y)``.

    Points outside ``[0, W-1] x [0, H-1]`` are clamped onto the grid.
    """
    vals, _, _ = _backend.bilinear(as_features(grid), np.asarray(p, dtype=np.float64).reshape(1, 2))
    return vals[0]


def bilinear_sample_many(grid, points):
    """Values and x/y derivatives at many index-coordinate points."""
    return _backend.bilinear(as_features(grid), np.asarray(points, dtype=np.float64).reshape(-1, 2))


def sample_at(grid, points):
    """Sample at ring (pixel-centre) coordinates. Returns ``(values, d/dx, d/dy)``."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2) - 0.5
    return _backend.bilinear(as_features(grid), pts)


def rasterize(ring, height: int, width: int) -> np.ndarray:
    """Boolean mask of pixels whose centre is inside ``ring`` (even-odd rule).

    Centres lying exactly on the boundary count as inside.
    """
    if height < 1 or width < 1:
        raise DimensionError("raster dimensions must be positive")
    return _backend.rasterize(np.asarray(ring, dtype=np.float64), int(height), int(width)).astype(bool)


def rasterize_union(rings, height: int, width: int) -> np.ndarray:
    out = np.zeros((height, width), dtype=bool)
    for r in rings:
        out |= rasterize(r, height, width)
    return out


def iou(a, b) -> float:
    """Intersection over union of two masks; 1.0 when both are empty."""
    a, b = as_mask(a), as_mask(b)
    same_shape(a, b, "masks")
    union = np.count_nonzero(a | b)
    if union == 0:
        return 1.0
    return np.count_nonzero(a & b) / union


def boundary_pixels(mask) -> np.ndarray:
    """Pixels on either side of the mask boundary (8-neighbourhood).

    A pixel is marked when its 3x3 neighbourhood contains both foreground and
    background; cells beyond the grid edge count as background.
    """
    m = as_mask(mask)
    grown = ndimage.binary_dilation(m, structure=_EIGHT)
    shrunk = ndimage.binary_erosion(m, structure=_EIGHT, border_value=0)
    return grown & ~shrunk


def components(mask) -> tuple[np.ndarray, int]:
    """8-connected component labels (0 is background) and their count."""
    labels, n = ndimage.label(as_mask(mask), structure=_EIGHT)
    return labels, int(n)


def largest_component(mask) -> np.ndarray:
    """Mask of the largest 8-connected component (lowest label on ties)."""
    labels, n = components(mask)
    if n == 0:
        return np.zeros(labels.shape, dtype=bool)
    sizes = np.bincount(labels.ravel(), minlength=n + 1)
    sizes[0] = -1
    return labels == int(np.argmax(sizes))
