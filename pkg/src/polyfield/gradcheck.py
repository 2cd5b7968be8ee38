"""Central finite-difference checks for every analytic gradient in the library.

Each check draws random instances at smooth points (away from clamps, kinks
and bilinear cell boundaries) and compares the analytic gradient with central
differences. The error of one instance is normwise,
``max|analytic - numeric| / max(max|analytic|, max|numeric|)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .afm import afm_loss, afm_loss_grad
from .losses import mask_bce, mask_bce_grad, ortho_loss, ortho_loss_grad
from .refine import attraction_energy

FD_STEP = 1e-5
TOLERANCE = 1e-4
INSTANCES = 50


@dataclass(frozen=True)
class CheckResult:
    name: str
    instances: int
    max_rel_err: float
    tolerance: float = TOLERANCE

    @property
    def passed(self) -> bool:
        return self.max_rel_err < self.tolerance


def central_diff(f, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """Gradient of scalar ``f`` at ``x`` by central differences, entry by entry."""
    x = np.array(x, dtype=np.float64)
    g = np.empty_like(x)
    flat, gflat = x.reshape(-1), g.reshape(-1)
    for k in range(flat.size):
        old = flat[k]
        flat[k] = old + h
        fp = f(x)
        flat[k] = old - h
        fm = f(x)
        flat[k] = old
        gflat[k] = (fp - fm) / (2 * h)
    return g


def rel_err(analytic, numeric) -> float:
    a, n = np.asarray(analytic).ravel(), np.asarray(numeric).ravel()
    scale = max(np.abs(a).max(initial=0.0), np.abs(n).max(initial=0.0))
    if scale == 0.0:
        return 0.0
    return float(np.abs(a - n).max() / scale)


def check_bce(rng, instances=INSTANCES, h=FD_STEP) -> CheckResult:
    worst = 0.0
    for _ in range(instances):
        shape = tuple(rng.integers(2, 6, size=2))
        gt = rng.random(shape) < 0.5
        pred = rng.uniform(0.02, 0.98, shape)
        worst = max(worst, rel_err(mask_bce_grad(pred, gt), central_diff(lambda p: mask_bce(p, gt), pred, h)))
    return CheckResult("mask_bce", instances, worst)


def check_afm(rng, mode: str, instances=INSTANCES, h=FD_STEP) -> CheckResult:
    worst = 0.0
    for _ in range(instances):
        shape = tuple(rng.integers(2, 5, size=2)) + (2,)
        gt = rng.normal(0, 3, shape)
        # keep every residual component well away from the L1 kink at zero
        resid = rng.choice([-1.0, 1.0], shape) * rng.uniform(0.1, 2.0, shape)
        pred = gt + resid
        num = central_diff(lambda p: afm_loss(p, gt, mode), pred, h)
        worst = max(worst, rel_err(afm_loss_grad(pred, gt, mode), num))
    return CheckResult(f"afm_{mode}", instances, worst)


def _random_ring(rng, n):
    ang = np.sort(rng.uniform(0, 2 * np.pi, n))
    rad = rng.uniform(3.0, 10.0, n)
    return np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1) + rng.uniform(-5, 5, 2)


def check_ortho(rng, instances=INSTANCES, h=FD_STEP) -> CheckResult:
    worst = 0.0
    for _ in range(instances):
        rings = [_random_ring(rng, int(rng.integers(3, 10))) for _ in range(int(rng.integers(1, 4)))]
        sizes = np.cumsum([len(r) for r in rings])[:-1]
        flat = np.concatenate(rings)

        def f(x):
            return ortho_loss(np.split(x, sizes))

        worst = max(worst, rel_err(np.concatenate(ortho_loss_grad(rings)), central_diff(f, flat, h)))
    return CheckResult("ortho", instances, worst)


def check_energy(rng, instances=INSTANCES, h=FD_STEP) -> CheckResult:
    """Attraction data term of the energy refiner on random smooth fields."""
    worst = 0.0
    for _ in range(instances):
        hh, ww = (int(s) for s in rng.integers(6, 12, size=2))
        field = rng.normal(0, 2, (hh, ww, 2))
        n = int(rng.integers(3, 8))
        # index coordinates with fractional parts in [0.1, 0.9]: never on a cell boundary
        cells = np.stack([rng.integers(0, ww - 1, n), rng.integers(0, hh - 1, n)], axis=1)
        ring = cells + rng.uniform(0.1, 0.9, (n, 2)) + 0.5
        _, g = attraction_energy(ring, field)
        num = central_diff(lambda v: attraction_energy(v, field)[0], ring, h)
        worst = max(worst, rel_err(g, num))
    return CheckResult("energy_data", instances, worst)


def run_all(seed: int = 0, instances: int = INSTANCES) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    return [
        check_bce(rng, instances),
        check_afm(rng, "sq_l2", instances),
        check_afm(rng, "l1", instances),
        check_ortho(rng, instances),
        check_energy(rng, instances),
    ]
