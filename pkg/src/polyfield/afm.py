"""Attraction field maps.

A field is an ``(H, W, 2)`` float array. The vector stored at pixel ``(i, j)``
points from the pixel centre ``(j + 0.5, i + 0.5)`` to the nearest point on
the union of the ring boundaries.
"""
from __future__ import annotations

import numpy as np

from . import _backend
from .errors import DimensionError
from .geometry import ring_edges

LOSS_MODES = ("sq_l2", "l1")
VOTE_TOL = 1e-6


def pixel_centers(height: int, width: int) -> np.ndarray:
    """``(H*W, 2)`` array of pixel centres in row-major order."""
    jj, ii = np.meshgrid(np.arange(width, dtype=np.float64), np.arange(height, dtype=np.float64))
    return np.stack([jj.ravel() + 0.5, ii.ravel() + 0.5], axis=1)


def encode_afm(rings, height: int, width: int) -> np.ndarray:
    if len(rings) == 0:
        raise ValueError("encode_afm needs at least one ring")
    if height < 1 or width < 1:
        raise DimensionError("field dimensions must be positive")
    starts, ends = zip(*(ring_edges(r) for r in rings))
    a = np.concatenate(starts)
    b = np.concatenate(ends)
    centers = pixel_centers(height, width)
    foot, _, _ = _backend.nearest_on_segments(centers, a, b)
    return (foot - centers).reshape(height, width, 2)


def as_field(field) -> np.ndarray:
    f = np.asarray(field, dtype=np.float64)
    if f.ndim != 3 or f.shape[2] != 2 or min(f.shape[:2]) < 1:
        raise DimensionError(f"attraction field must be (H, W, 2), got shape {f.shape}")
    return f


def _residual(pred, gt):
    pred, gt = as_field(pred), as_field(gt)
    if pred.shape != gt.shape:
        raise DimensionError(f"field shapes differ: {pred.shape} vs {gt.shape}")
    return pred - gt


def afm_loss(pred, gt, mode: str = "sq_l2") -> float:
    """Mean over pixels of the squared L2 (default) or the L1 vector residual."""
    r = _residual(pred, gt)
    n = r.shape[0] * r.shape[1]
    if mode == "sq_l2":
        return float(np.sum(r * r) / n)
    if mode == "l1":
        return float(np.sum(np.abs(r)) / n)
    raise ValueError(f"unknown AFM loss mode {mode!r}; expected one of {LOSS_MODES}")


def afm_loss_grad(pred, gt, mode: str = "sq_l2") -> np.ndarray:
    """Gradient of :func:`afm_loss` with respect to ``pred`` (subgradient 0 at kinks for l1)."""
    r = _residual(pred, gt)
    n = r.shape[0] * r.shape[1]
    if mode == "sq_l2":
        return 2.0 * r / n
    if mode == "l1":
        return np.sign(r) / n
    raise ValueError(f"unknown AFM loss mode {mode!r}; expected one of {LOSS_MODES}")


def afm_votes(field) -> np.ndarray:
    """Number of pixels whose displaced centre lands on each cell."""
    return _backend.afm_votes(as_field(field), VOTE_TOL)


def decode_afm(field, vote_threshold: int = 2) -> np.ndarray:
    """Boundary evidence from a field by vote accumulation.

    Each pixel votes for the cell containing ``centre + vector``; a landing
    point on a shared pixel border (within ``VOTE_TOL``) votes for every cell
    touching it. Cells with at least ``vote_threshold`` votes are marked.
    """
    return afm_votes(field) >= vote_threshold
