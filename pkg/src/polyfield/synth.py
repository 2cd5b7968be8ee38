"""Deterministic synthetic scenes of rectilinear buildings.

Each scene carries ground-truth rings plus everything rendered from them:
the union mask, convex/concave corner heatmaps, the attraction field, and
jittered copies of the rings to refine.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .afm import encode_afm
from .errors import GeometryError, PlacementError
from .geometry import as_ring, is_simple, point_segment_distance, turn_angles
from .raster import rasterize_union

CORNER_SIGMA = 1.0
# bump centres sit this far inside the corner so one pixel is a strict peak
CORNER_INSET = 0.35
MAX_PLACEMENT_ATTEMPTS = 1000


@dataclass(frozen=True)
class SceneSpec:
    seed: int
    height: int = 128
    width: int = 128
    n_buildings: int = 3
    size_range: tuple = (16, 40)
    vertex_budget: tuple = (4, 12)
    vertex_sigma: float = 0.0
    mask_flip_prob: float = 0.0
    separation: int = 2
    margin: int = 2

    def __post_init__(self):
        lo, hi = self.size_range
        vlo, vhi = self.vertex_budget
        if self.height < 1 or self.width < 1 or self.n_buildings < 0:
            raise ValueError("scene dimensions and building count must be positive")
        if not 4 <= lo <= hi:
            raise ValueError(f"invalid size_range {self.size_range}")
        if not 4 <= vlo <= vhi:
            raise ValueError(f"invalid vertex_budget {self.vertex_budget}")
        if self.vertex_sigma < 0 or not 0 <= self.mask_flip_prob <= 1:
            raise ValueError("noise parameters must be non-negative (flip probability <= 1)")
        if self.separation < 0 or self.margin < 0:
            raise ValueError("separation and margin must be non-negative")


@dataclass
class Scene:
    spec: SceneSpec
    gt_rings: list
    mask: np.ndarray
    convex_map: np.ndarray
    concave_map: np.ndarray
    afm: np.ndarray
    corrupted_rings: list = field(default_factory=list)


def _edge_separation(ring) -> float:
    """Smallest distance between two non-adjacent edges."""
    n = len(ring)
    best = np.inf
    for i in range(n):
        a0, a1 = ring[i], ring[(i + 1) % n]
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            b0, b1 = ring[j], ring[(j + 1) % n]
            d = min(
                point_segment_distance(a0, b0, b1)[0],
                point_segment_distance(a1, b0, b1)[0],
                point_segment_distance(b0, a0, a1)[0],
                point_segment_distance(b1, a0, a1)[0],
            )
            best = min(best, d)
    return best


def _valid(ring, min_edge) -> bool:
    edges = np.abs(np.roll(ring, -1, axis=0) - ring).sum(axis=1)
    if edges.min() < min_edge or not is_simple(ring):
        return False
    return len(ring) == 4 or _edge_separation(ring) >= min_edge


def _cut_corner(rng, ring, min_edge):
    n = len(ring)
    turn = turn_angles(ring)
    k = int(rng.choice(np.flatnonzero(turn > 0)))
    u, v, w = ring[k - 1], ring[k], ring[(k + 1) % n]
    lin, lout = np.abs(v - u).sum(), np.abs(w - v).sum()
    if lin < 2 * min_edge or lout < 2 * min_edge:
        return None
    a = rng.integers(min_edge, lin - min_edge + 1)
    b = rng.integers(min_edge, lout - min_edge + 1)
    ein, eout = (v - u) / lin, (w - v) / lout
    new = [v - a * ein, v - a * ein + b * eout, v + b * eout]
    return np.concatenate([ring[:k], new, ring[k + 1:]])


def _cut_notch(rng, ring, min_edge):
    n = len(ring)
    k = int(rng.integers(n))
    u, w = ring[k], ring[(k + 1) % n]
    length = np.abs(w - u).sum()
    if length < 3 * min_edge:
        return None
    e = (w - u) / length
    inward = np.array([-e[1], e[0]])
    s = rng.integers(min_edge, length - 2 * min_edge + 1)
    c = rng.integers(min_edge, length - s - min_edge + 1)
    depth = rng.integers(min_edge, 3 * min_edge + 1)
    p0 = u + s * e
    p3 = u + (s + c) * e
    new = [p0, p0 + depth * inward, p3 + depth * inward, p3]
    return np.concatenate([ring[:k + 1], new, ring[k + 1:]])


def gen_rectilinear(rng, corners: int, bbox, min_edge: int = 4, max_tries: int = 200) -> np.ndarray:
    """Random simple rectilinear CCW ring with exactly ``corners`` integer vertices.

    Starts from the rectangle ``bbox = (x0, y0, x1, y1)`` and cuts corner
    steps (+2 vertices) and edge notches (+4) that keep every edge and every
    wall thickness at least ``min_edge`` pixels.
    """
    if corners < 4 or corners % 2:
        raise ValueError("corners must be even and at least 4")
    x0, y0, x1, y1 = (int(t) for t in bbox)
    if x1 - x0 < min_edge or y1 - y0 < min_edge:
        raise GeometryError(f"bbox {bbox} is too small")
    base = as_ring(np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=np.float64))
    for _ in range(max_tries):
        ring = base
        for _ in range(4 * corners):
            missing = corners - len(ring)
            if missing == 0:
                return ring
            if missing >= 4 and rng.random() < 0.35:
                cand = _cut_notch(rng, ring, min_edge)
            else:
                cand = _cut_corner(rng, ring, min_edge)
            if cand is not None and _valid(cand, min_edge):
                ring = cand
        if len(ring) == corners:
            return ring
    raise GeometryError(f"could not build a {corners}-corner ring in {bbox} after {max_tries} tries")


def corner_maps(rings, height: int, width: int, sigma: float = CORNER_SIGMA):
    """Convex and concave heatmaps: Gaussian bumps at ring vertices, combined by max."""
    convex = np.zeros((height, width))
    concave = np.zeros((height, width))
    reach = int(np.ceil(4 * sigma)) + 1
    for ring in rings:
        ring = np.asarray(ring, dtype=np.float64)
        turn = turn_angles(ring)
        ein = ring - np.roll(ring, 1, axis=0)
        eout = np.roll(ring, -1, axis=0) - ring
        for v, t, a, b in zip(ring, turn, ein, eout):
            if t == 0:
                continue
            bis = -a / np.hypot(*a) + b / np.hypot(*b)
            bis /= np.hypot(*bis)
            centre = v + (CORNER_INSET if t > 0 else -CORNER_INSET) * bis
            r0, r1 = max(int(centre[1]) - reach, 0), min(int(centre[1]) + reach + 1, height)
            c0, c1 = max(int(centre[0]) - reach, 0), min(int(centre[0]) + reach + 1, width)
            if r0 >= r1 or c0 >= c1:
                continue
            yy, xx = np.mgrid[r0:r1, c0:c1] + 0.5
            bump = np.exp(-((xx - centre[0]) ** 2 + (yy - centre[1]) ** 2) / (2 * sigma * sigma))
            target = convex if t > 0 else concave
            np.maximum(target[r0:r1, c0:c1], bump, out=target[r0:r1, c0:c1])
    return convex, concave


def _place(rng, spec: SceneSpec):
    boxes: list = []
    rings: list = []
    attempts = 0
    lo, hi = spec.size_range
    vlo, vhi = spec.vertex_budget
    while len(rings) < spec.n_buildings:
        attempts += 1
        if attempts > MAX_PLACEMENT_ATTEMPTS:
            raise PlacementError(
                f"placed {len(rings)} of {spec.n_buildings} buildings in a "
                f"{spec.height}x{spec.width} scene after {MAX_PLACEMENT_ATTEMPTS} attempts"
            )
        bw, bh = (int(s) for s in rng.integers(lo, hi + 1, size=2))
        xmax = spec.width - spec.margin - bw
        ymax = spec.height - spec.margin - bh
        if xmax < spec.margin or ymax < spec.margin:
            continue
        x0 = int(rng.integers(spec.margin, xmax + 1))
        y0 = int(rng.integers(spec.margin, ymax + 1))
        box = (x0, y0, x0 + bw, y0 + bh)
        sep = spec.separation
        if any(
            box[0] < b[2] + sep and b[0] < box[2] + sep and box[1] < b[3] + sep and b[1] < box[3] + sep
            for b in boxes
        ):
            continue
        k = 2 * int(rng.integers(vlo // 2 + vlo % 2, vhi // 2 + 1))
        try:
            ring = gen_rectilinear(rng, k, box, max_tries=20)
        except GeometryError:
            continue
        boxes.append(box)
        rings.append(ring)
    return rings


def render_scene(spec: SceneSpec) -> Scene:
    """Build a scene; identical specs give bit-identical scenes."""
    rng = np.random.default_rng(spec.seed)
    rings = _place(rng, spec)
    h, w = spec.height, spec.width
    mask = rasterize_union(rings, h, w)
    if spec.mask_flip_prob > 0:
        mask ^= rng.random((h, w)) < spec.mask_flip_prob
    convex, concave = corner_maps(rings, h, w)
    field_ = encode_afm(rings, h, w) if rings else np.zeros((h, w, 2))
    if spec.vertex_sigma > 0:
        corrupted = [r + rng.normal(0.0, spec.vertex_sigma, r.shape) for r in rings]
    else:
        corrupted = [r.copy() for r in rings]
    return Scene(spec, rings, mask, convex, concave, field_, corrupted)
