"""Raster and vector evaluation metrics for predicted building polygons."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import GeometryError
from .geometry import closest_points_on_ring, ring_edges
from .raster import as_mask, rasterize, same_shape

DEFAULT_THRESHOLDS = tuple(round(0.5 + 0.05 * k, 2) for k in range(10))
TANGENT_TIE_TOL = 1e-9


@dataclass(frozen=True)
class Detection:
    ring: np.ndarray
    score: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"detection score {self.score} outside [0, 1]")


@dataclass
class EvalConfig:
    height: int
    width: int
    thresholds: tuple = DEFAULT_THRESHOLDS
    match_iou: float = 0.5


@dataclass
class MetricsReport:
    precision: float
    recall: float
    polis_mean: float | None
    mta_mean: float | None
    ap: float
    ar: float
    per_instance: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def pixel_pr(pred, gt) -> tuple[float, float]:
    """Pixel precision and recall.

    Precision is 1.0 when nothing is predicted and the ground truth is empty,
    0.0 when nothing is predicted otherwise. Recall is 1.0 for an empty
    ground truth.
    """
    p, g = as_mask(pred), as_mask(gt)
    same_shape(p, g, "masks")
    tp = np.count_nonzero(p & g)
    fp = np.count_nonzero(p & ~g)
    fn = np.count_nonzero(~p & g)
    if tp + fp == 0:
        precision = 1.0 if tp + fn == 0 else 0.0
    else:
        precision = tp / (tp + fp)
    recall = 1.0 if tp + fn == 0 else tp / (tp + fn)
    return float(precision), float(recall)


def _check_ring(r):
    r = np.asarray(r, dtype=np.float64)
    if r.ndim != 2 or r.shape[1] != 2 or len(r) < 3:
        raise GeometryError("degenerate ring")
    return r


def _one_sided(src, dst, boundary):
    if boundary:
        _, _, d = closest_points_on_ring(src, dst)
    else:
        diff = src[:, None, :] - dst[None, :, :]
        d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)).min(axis=1)
    return float(d.sum() / (2 * len(src)))


def polis(p, q, boundary: bool = True) -> float:
    """PoLiS distance in pixels.

    Each ring's vertices are measured against the other ring's continuous
    boundary (``boundary=False`` measures against its vertices only).
    """
    p, q = _check_ring(p), _check_ring(q)
    return _one_sided(p, q, boundary) + _one_sided(q, p, boundary)


def _unit(v):
    n = np.hypot(v[..., 0], v[..., 1])
    return v / np.where(n > 0, n, 1.0)[..., None], n > 0


def _angle_deg(u, v):
    cross = u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]
    dot = u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1]
    return np.degrees(np.arctan2(np.abs(cross), dot))


def tangent_errors(p, q) -> np.ndarray:
    """Per-vertex tangent error of ``p`` against ``q`` in degrees.

    Vertex ``i`` of ``p`` uses the direction of its outgoing edge. The
    reference direction is that of the edge of ``q`` containing the nearest
    boundary point; when several edges are equally near (e.g. the nearest
    point is a shared vertex of ``q``) the smallest angle among them is used.
    Vertices with a zero-length outgoing edge give NaN.
    """
    p, q = _check_ring(p), _check_ring(q)
    tp, p_ok = _unit(np.roll(p, -1, axis=0) - p)
    qa, qb = ring_edges(q)
    tq, q_ok = _unit(qb - qa)
    # all vertex-to-edge distances
    d = qb - qa
    l2 = np.einsum("ij,ij->i", d, d)
    rel = p[:, None, :] - qa[None, :, :]
    t = np.clip(np.einsum("ijk,jk->ij", rel, d) / np.where(l2 > 0, l2, 1.0), 0.0, 1.0)
    e = rel - t[..., None] * d[None, :, :]
    dist = np.hypot(e[..., 0], e[..., 1])
    dist = np.where(q_ok[None, :], dist, np.inf)
    dmin = dist.min(axis=1, keepdims=True)
    tied = dist <= dmin + TANGENT_TIE_TOL * np.maximum(1.0, dmin)
    ang = _angle_deg(tp[:, None, :], tq[None, :, :])
    err = np.where(tied, ang, np.inf).min(axis=1)
    return np.where(p_ok, err, np.nan)


def max_tangent(p, q) -> float:
    """MaxTangent: the largest per-vertex tangent error of ``p`` against ``q``, degrees."""
    err = tangent_errors(p, q)
    err = err[~np.isnan(err)]
    return float(err.max()) if err.size else 0.0


def _rings_of(dets):
    return [d.ring if isinstance(d, Detection) else np.asarray(d, dtype=np.float64) for d in dets]


def _scores_of(dets):
    return np.array([d.score if isinstance(d, Detection) else 1.0 for d in dets], dtype=np.float64)


def iou_matrix(det_rings, gt_rings, height, width) -> np.ndarray:
    dm = [rasterize(r, height, width) for r in det_rings]
    gm = [rasterize(r, height, width) for r in gt_rings]
    out = np.zeros((len(dm), len(gm)))
    for i, a in enumerate(dm):
        for j, b in enumerate(gm):
            union = np.count_nonzero(a | b)
            out[i, j] = np.count_nonzero(a & b) / union if union else 0.0
    return out


def score_order(scores) -> np.ndarray:
    """Detection indices by descending score, stable on ties."""
    return np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")


def greedy_match(ious, order, threshold) -> np.ndarray:
    """Assign each detection (in ``order``) the unmatched gt of highest IoU >= threshold.

    Returns the matched gt index per detection, -1 when unmatched. IoU ties go
    to the lower gt index.
    """
    n_det, n_gt = ious.shape
    match = np.full(n_det, -1, dtype=np.intp)
    taken = np.zeros(n_gt, dtype=bool)
    for i in order:
        if n_gt == 0:
            break
        cand = np.where(taken, -1.0, ious[i])
        j = int(np.argmax(cand))
        if cand[j] >= threshold:
            match[i] = j
            taken[j] = True
    return match


def _average_precision(tp_sorted, n_gt):
    tp = np.cumsum(tp_sorted)
    fp = np.cumsum(~tp_sorted)
    recall = tp / n_gt
    precision = tp / np.maximum(tp + fp, 1)
    mrec = np.concatenate([[0.0], recall, [1.0]])
    mpre = np.concatenate([[0.0], precision, [0.0]])
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    step = np.flatnonzero(mrec[1:] != mrec[:-1])
    return float(np.sum((mrec[step + 1] - mrec[step]) * mpre[step + 1]))


def ap_ar_curves(dets, gts, raster_size, thresholds=DEFAULT_THRESHOLDS):
    """Per-threshold AP and AR arrays (see :func:`ap_ar`)."""
    h, w = raster_size
    thresholds = np.asarray(thresholds, dtype=np.float64)
    if np.any(thresholds <= 0) or np.any(thresholds > 1):
        raise ValueError("IoU thresholds must lie in (0, 1]")
    det_rings, gt_rings = _rings_of(dets), [np.asarray(g, dtype=np.float64) for g in gts]
    n_det, n_gt = len(det_rings), len(gt_rings)
    if n_gt == 0:
        v = 0.0 if n_det else 1.0
        return np.full(len(thresholds), v), np.ones(len(thresholds))
    if n_det == 0:
        return np.zeros(len(thresholds)), np.zeros(len(thresholds))
    ious = iou_matrix(det_rings, gt_rings, h, w)
    order = score_order(_scores_of(dets))
    aps, ars = [], []
    for thr in thresholds:
        match = greedy_match(ious, order, thr)
        tp_sorted = match[order] >= 0
        aps.append(_average_precision(tp_sorted, n_gt))
        ars.append(np.count_nonzero(match >= 0) / n_gt)
    return np.array(aps), np.array(ars)


def ap_ar(dets, gts, raster_size, thresholds=DEFAULT_THRESHOLDS) -> tuple[float, float]:
    """COCO-style AP and AR averaged over IoU thresholds.

    Per threshold, detections are taken by descending score and greedily
    matched on raster IoU. AP is the area under the monotone (interpolated)
    precision-recall envelope; AR is the matched fraction of ground truth.
    With no ground truth, AR is 1 and AP is 0 (1 if there are also no
    detections).
    """
    aps, ars = ap_ar_curves(dets, gts, raster_size, thresholds)
    return float(np.mean(aps)), float(np.mean(ars))


def evaluate_scene(dets, gts, cfg: EvalConfig) -> MetricsReport:
    """Full report for one scene.

    Pixel precision/recall come from the union rasterizations; PoLiS and
    MaxTangent are averaged over detection/gt pairs matched at
    ``cfg.match_iou`` and are ``None`` without matches.
    """
    det_rings = _rings_of(dets)
    gt_rings = [np.asarray(g, dtype=np.float64) for g in gts]
    h, w = cfg.height, cfg.width
    pred_mask = np.zeros((h, w), dtype=bool)
    for r in det_rings:
        pred_mask |= rasterize(r, h, w)
    gt_mask = np.zeros((h, w), dtype=bool)
    for r in gt_rings:
        gt_mask |= rasterize(r, h, w)
    precision, recall = pixel_pr(pred_mask, gt_mask)
    ap, ar = ap_ar(dets, gt_rings, (h, w), cfg.thresholds)

    per_instance = []
    if det_rings and gt_rings:
        ious = iou_matrix(det_rings, gt_rings, h, w)
        order = score_order(_scores_of(dets))
        match = greedy_match(ious, order, cfg.match_iou)
        for i in order:
            j = int(match[i])
            if j < 0:
                continue
            per_instance.append({
                "det": int(i),
                "gt": j,
                "polis": polis(det_rings[i], gt_rings[j]),
                "mta": max_tangent(det_rings[i], gt_rings[j]),
                "iou": float(ious[i, j]),
            })
    polis_mean = float(np.mean([m["polis"] for m in per_instance])) if per_instance else None
    mta_mean = float(np.mean([m["mta"] for m in per_instance])) if per_instance else None
    return MetricsReport(precision, recall, polis_mean, mta_mean, ap, ar, per_instance)


def aggregate(reports) -> dict:
    """Dataset-level summary: scene means for P/R/AP/AR, instance means for PoLiS/MTA.

    ``mta_max`` is the largest per-polygon MaxTangent over the dataset.
    """
    inst = [m for r in reports for m in r.per_instance]

    def mean(vals):
        return float(np.mean(vals)) if len(vals) else None

    return {
        "scenes": len(reports),
        "instances": len(inst),
        "precision": mean([r.precision for r in reports]),
        "recall": mean([r.recall for r in reports]),
        "polis_mean": mean([m["polis"] for m in inst]),
        "mta_mean": mean([m["mta"] for m in inst]),
        "mta_max": max((m["mta"] for m in inst), default=None),
        "ap": mean([r.ap for r in reports]),
        "ar": mean([r.ar for r in reports]),
    }

