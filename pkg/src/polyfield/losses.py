"""Training losses and their analytic gradients."""
from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, GeometryError
from .raster import as_mask, same_shape

PART_NAMES = ("mask", "afm", "vertex", "ortho")


@dataclass(frozen=True)
class LossWeights:
    w_mask: float = 1.0
    w_afm: float = 1.0
    w_vertex: float = 1.0
    w_ortho: float = 1.0

    def __post_init__(self):
        for name in ("w_mask", "w_afm", "w_vertex", "w_ortho"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative")

    def as_tuple(self):
        return (self.w_mask, self.w_afm, self.w_vertex, self.w_ortho)


def _bce_inputs(pred, gt, clamp_eps):
    if not 0 < clamp_eps < 0.5:
        raise ValueError("clamp_eps must lie in (0, 0.5)")
    p = np.asarray(pred, dtype=np.float64)
    y = as_mask(gt).astype(np.float64)
    same_shape(p, y, "prediction and ground truth")
    return p, y


def mask_bce(pred, gt, clamp_eps: float = 1e-7) -> float:
    """Mean binary cross-entropy with ``pred`` clamped to ``[eps, 1 - eps]``."""
    p, y = _bce_inputs(pred, gt, clamp_eps)
    pc = np.clip(p, clamp_eps, 1.0 - clamp_eps)
    return float(np.mean(-(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc))))


def mask_bce_grad(pred, gt, clamp_eps: float = 1e-7) -> np.ndarray:
    p, y = _bce_inputs(pred, gt, clamp_eps)
    live = (p > clamp_eps) & (p < 1.0 - clamp_eps)
    pc = np.clip(p, clamp_eps, 1.0 - clamp_eps)
    g = (-(y / pc) + (1.0 - y) / (1.0 - pc)) / p.size
    return np.where(live, g, 0.0)


def vertex_l1(pred, gt, align: str = "fixed") -> float:
    """Sum of per-vertex L1 coordinate differences.

    ``align="cyclic"`` rotates the starting vertex of ``gt`` to minimise the sum.
    """
    p = np.asarray(pred, dtype=np.float64)
    g = np.asarray(gt, dtype=np.float64)
    if p.shape != g.shape:
        raise DimensionError(f"vertex counts differ: {len(p)} vs {len(g)}")
    if align == "fixed":
        return float(np.abs(p - g).sum())
    if align == "cyclic":
        return float(min(np.abs(p - np.roll(g, -s, axis=0)).sum() for s in range(len(g))))
    raise ValueError(f"unknown alignment {align!r}")


def resample_ring(ring, n: int) -> np.ndarray:
    """``n`` points equally spaced by arc length, starting at vertex 0."""
    if n < 3:
        raise ValueError("n must be at least 3")
    r = np.asarray(ring, dtype=np.float64)
    nxt = np.roll(r, -1, axis=0)
    seg = np.hypot(*(nxt - r).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if total <= 0:
        raise GeometryError("ring has zero perimeter")
    s = np.arange(n) * (total / n)
    k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(r) - 1)
    t = np.where(seg[k] > 0, (s - cum[k]) / np.where(seg[k] > 0, seg[k], 1.0), 0.0)
    return r[k] + t[:, None] * (nxt[k] - r[k])


def matched_vertex_l1(pred, gt) -> float:
    """Vertex L1 after resampling both rings to the larger count and cyclic alignment."""
    n = max(len(pred), len(gt))
    p = pred if len(pred) == n else resample_ring(pred, n)
    g = gt if len(gt) == n else resample_ring(gt, n)
    return vertex_l1(p, g, align="cyclic")


def _ring_ortho(ring):
    """Mean of sin^2(2 * turn) over vertices and its gradient for one ring."""
    v = np.asarray(ring, dtype=np.float64)
    n = len(v)
    if n < 3:
        raise GeometryError("orthogonality needs rings of at least 3 vertices")
    a = v - np.roll(v, 1, axis=0)
    b = np.roll(v, -1, axis=0) - v
    la = a[:, 0] ** 2 + a[:, 1] ** 2
    lb = b[:, 0] ** 2 + b[:, 1] ** 2
    ok = (la > 0) & (lb > 0)
    grad = np.zeros_like(v)
    if not ok.any():
        return 0.0, grad
    a, b, la, lb = a[ok], b[ok], la[ok], lb[ok]
    c = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    d = a[:, 0] * b[:, 0] + a[:, 1] * b[:, 1]
    q = la * lb
    s = 2.0 * c * d / q  # sin(2 * turn)
    m = int(ok.sum())
    loss = float(np.sum(s * s) / m)

    # ds/da and ds/db; c = a x b, d = a . b
    dc_da = np.stack([b[:, 1], -b[:, 0]], axis=1)
    dc_db = np.stack([-a[:, 1], a[:, 0]], axis=1)
    k = (2.0 / q)[:, None]
    ds_da = k * (d[:, None] * dc_da + c[:, None] * b) - (2.0 * s / la)[:, None] * a
    ds_db = k * (d[:, None] * dc_db + c[:, None] * a) - (2.0 * s / lb)[:, None] * b
    w = (2.0 * s / m)[:, None]
    ga, gb = w * ds_da, w * ds_db
    idx = np.flatnonzero(ok)
    # a = v[k] - v[k-1], b = v[k+1] - v[k]
    np.add.at(grad, idx, ga - gb)
    np.add.at(grad, (idx - 1) % n, -ga)
    np.add.at(grad, (idx + 1) % n, gb)
    return loss, grad


def ortho_loss(rings) -> float:
    """Average over rings of the mean ``sin^2(2 * turn angle)`` penalty.

    Zero exactly when every turn is a multiple of 90 degrees. Vertices adjacent
    to a zero-length edge are skipped.
    """
    if len(rings) == 0:
        return 0.0
    return float(sum(_ring_ortho(r)[0] for r in rings) / len(rings))


def ortho_loss_grad(rings) -> list[np.ndarray]:
    """Per-ring ``(n, 2)`` gradients of :func:`ortho_loss`."""
    n = len(rings)
    return [_ring_ortho(r)[1] / n for r in rings]


def total_loss(parts, weights: LossWeights) -> float:
    """Weighted sum of the mask, AFM, vertex and orthogonality terms.

    ``parts`` is a mapping keyed by ``mask``/``afm``/``vertex``/``ortho``
    (missing keys count as 0) or a 4-sequence in that order.
    """
    if isinstance(parts, Mapping):
        unknown = set(parts) - set(PART_NAMES)
        if unknown:
            raise KeyError(f"unknown loss parts: {sorted(unknown)}")
        values = [float(parts.get(k, 0.0)) for k in PART_NAMES]
    elif isinstance(parts, Sequence) and len(parts) == 4:
        values = [float(x) for x in parts]
    else:
        raise ValueError("parts must be a mapping or a 4-sequence")
    if not all(np.isfinite(values)):
        raise ValueError("loss parts must be finite")
    return float(sum(w * x for w, x in zip(weights.as_tuple(), values)))
