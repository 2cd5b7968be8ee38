import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import star_ring
from oracles import confusion, max_tangent_oracle, polis_dense
from polyfield.errors import DimensionError, GeometryError
from polyfield.geometry import rotate
from polyfield.metrics import (
    DEFAULT_THRESHOLDS, Detection, EvalConfig, aggregate, ap_ar, ap_ar_curves, evaluate_scene, greedy_match,
    max_tangent, pixel_pr, polis,
)

UNIT = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)


def test_thresholds():
    assert DEFAULT_THRESHOLDS == (0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95)


def test_pixel_pr_examples():
    gt = np.zeros((4, 4), bool)
    gt[:2] = True
    assert pixel_pr(gt, gt) == (1.0, 1.0)
    assert pixel_pr(np.ones((4, 4), bool), gt) == (0.5, 1.0)
    assert pixel_pr(np.zeros((4, 4)), np.zeros((4, 4))) == (1.0, 1.0)
    assert pixel_pr(np.zeros((4, 4)), gt) == (0.0, 0.0)
    with pytest.raises(DimensionError):
        pixel_pr(gt, np.zeros((3, 3)))


def test_pixel_pr_matches_loop(rng):
    for _ in range(20):
        p, g = rng.random((6, 7)) < 0.5, rng.random((6, 7)) < 0.5
        tp, fp, fn = confusion(p, g)
        prec, rec = pixel_pr(p, g)
        assert prec == pytest.approx(tp / (tp + fp)) and rec == pytest.approx(tp / (tp + fn))


def test_polis_examples():
    assert polis(UNIT, UNIT) == 0.0
    # worked value, frozen from the dense-sampling oracle
    assert polis(UNIT, UNIT + [0.5, 0.0]) == pytest.approx(0.25, abs=1e-9)
    assert polis_dense(UNIT, UNIT + [0.5, 0.0], per_edge=10_001) == pytest.approx(0.25, abs=1e-6)
    with pytest.raises(GeometryError):
        polis(UNIT[:2], UNIT)


def test_polis_vertex_mode_is_upper_bound(rng):
    for _ in range(20):
        p, q = star_ring(rng, 6), star_ring(rng, 5)
        assert polis(p, q, boundary=False) >= polis(p, q) - 1e-12


@given(st.integers(0, 100_000))
def test_polis_symmetric(seed):
    r = np.random.default_rng(seed)
    p, q = star_ring(r, int(r.integers(3, 9))), star_ring(r, int(r.integers(3, 9)))
    assert polis(p, q) == pytest.approx(polis(q, p), abs=1e-12)


@given(st.integers(0, 100_000), st.floats(-5, 5), st.floats(-5, 5))
def test_polis_translation_bound(seed, dx, dy):
    p = star_ring(np.random.default_rng(seed), 6)
    assert polis(p, p + [dx, dy]) <= np.hypot(dx, dy) + 1e-9


def test_max_tangent_examples():
    assert max_tangent(UNIT, UNIT) == 0.0
    rot = rotate(UNIT, 45.0, center=(0.5, 0.5))
    assert max_tangent(rot, UNIT) == pytest.approx(45.0, abs=1e-9)
    assert max_tangent_oracle(rot, UNIT) == pytest.approx(45.0, abs=1e-9)


@given(st.integers(0, 100_000))
def test_max_tangent_self_is_zero(seed):
    p = star_ring(np.random.default_rng(seed), 7)
    assert max_tangent(p, p) == 0.0


def test_max_tangent_matches_oracle(rng):
    for _ in range(100):
        p, q = star_ring(rng, int(rng.integers(3, 12))), star_ring(rng, int(rng.integers(3, 12)))
        assert max_tangent(p, q) == pytest.approx(max_tangent_oracle(p, q), abs=1e-6)


@given(st.integers(0, 100_000), st.floats(-180, 180))
def test_max_tangent_rotation_invariant(seed, deg):
    r = np.random.default_rng(seed)
    p, q = star_ring(r, 6), star_ring(r, 5)
    assert max_tangent(rotate(p, deg), rotate(q, deg)) == pytest.approx(max_tangent(p, q), abs=1e-6)


def _rect(x0, y0, x1, y1):
    return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float)


def test_ap_ar_iou_062():
    gt = _rect(0, 0, 31, 1)      # 31 pixels
    det = _rect(0, 0, 50, 1)     # 50 pixels, contains gt: IoU = 31 / 50 = 0.62
    aps, ars = ap_ar_curves([Detection(det, 0.9)], [gt], (2, 60))
    # matched at 0.50, 0.55, 0.60 (precision 1 at recall 1), unmatched above
    assert aps.tolist() == [1, 1, 1, 0, 0, 0, 0, 0, 0, 0]
    assert ars.tolist() == [1, 1, 1, 0, 0, 0, 0, 0, 0, 0]
    ap, ar = ap_ar([Detection(det, 0.9)], [gt], (2, 60))
    assert ap == pytest.approx(0.3, abs=1e-15) and ar == pytest.approx(0.3, abs=1e-15)


def test_ap_ar_conventions():
    gts = [_rect(0, 0, 4, 4), _rect(6, 6, 9, 9)]
    assert ap_ar([Detection(g, 1.0) for g in gts], gts, (10, 10)) == (1.0, 1.0)
    assert ap_ar([], gts, (10, 10)) == (0.0, 0.0)
    assert ap_ar([Detection(gts[0])], [], (10, 10)) == (0.0, 1.0)
    assert ap_ar([], [], (10, 10)) == (1.0, 1.0)
    with pytest.raises(ValueError):
        ap_ar([], gts, (10, 10), thresholds=(0.0,))


def test_ap_exhaustive_single_threshold(rng):
    """AP at one threshold against a from-scratch precision/recall sweep."""
    from polyfield.metrics import iou_matrix
    for _ in range(20):
        gts = [_rect(x, y, x + 4, y + 4) for x, y in rng.integers(0, 26, (4, 2))]
        dets = [Detection(_rect(x, y, x + 4, y + 4), float(s))
                for (x, y), s in zip(rng.integers(0, 26, (6, 2)), rng.random(6))]
        ious = iou_matrix([d.ring for d in dets], gts, 32, 32)
        order = sorted(range(len(dets)), key=lambda i: -dets[i].score)
        taken, tps = set(), []
        for i in order:
            best, bj = -1.0, -1
            for j in range(len(gts)):
                if j not in taken and ious[i, j] > best:
                    best, bj = ious[i, j], j
            if best >= 0.5:
                taken.add(bj)
                tps.append(True)
            else:
                tps.append(False)
        # interpolated AP: for each recall level take the max precision at or beyond it
        prec, rec, tp = [], [], 0
        for k, hit in enumerate(tps, 1):
            tp += hit
            prec.append(tp / k)
            rec.append(tp / len(gts))
        want, prev = 0.0, 0.0
        for k in range(len(rec)):
            if rec[k] > prev:
                want += (rec[k] - prev) * max(prec[k:])
                prev = rec[k]
        ap, ar = ap_ar(dets, gts, (32, 32), thresholds=(0.5,))
        assert ap == pytest.approx(want, abs=1e-12)
        assert ar == pytest.approx(len(taken) / len(gts), abs=1e-12)


def test_greedy_match_ties_lower_gt():
    ious = np.array([[0.7, 0.7]])
    assert greedy_match(ious, [0], 0.5).tolist() == [0]


def test_ap_ar_monotone_in_threshold():
    from polyfield.synth import SceneSpec, render_scene
    for s in range(20):
        sc = render_scene(SceneSpec(seed=s, n_buildings=3, vertex_sigma=1.5))
        dets = [Detection(r, float(k + 1) / 4) for k, r in enumerate(sc.corrupted_rings)]
        aps, ars = ap_ar_curves(dets, sc.gt_rings, (128, 128))
        assert np.all(np.diff(aps) <= 1e-12) and np.all(np.diff(ars) <= 1e-12)


def test_evaluate_scene_perfect_and_empty():
    gts = [_rect(2, 2, 8, 8), _rect(10, 3, 14, 9)]
    cfg = EvalConfig(16, 16)
    rep = evaluate_scene([Detection(g) for g in gts], gts, cfg)
    assert (rep.precision, rep.recall, rep.polis_mean, rep.mta_mean, rep.ap, rep.ar) == (1, 1, 0, 0, 1, 1)
    empty = evaluate_scene([], gts, cfg)
    assert empty.precision == 0.0 and empty.polis_mean is None and empty.mta_mean is None
    assert empty.ap == 0.0 and empty.ar == 0.0
    agg = aggregate([rep, empty])
    assert agg["instances"] == 2 and agg["mta_max"] == 0.0 and agg["ap"] == 0.5


def test_evaluate_scene_refined_beats_initialized():
    # initial predictions are the jittered rings; refined ones come from energy_refine on the scene field
    from polyfield.refine import energy_refine
    from polyfield.synth import SceneSpec, render_scene
    init_reports, ref_reports = [], []
    for s in range(20):
        sc = render_scene(SceneSpec(seed=s, n_buildings=3, vertex_sigma=2.0))
        cfg = EvalConfig(sc.mask.shape[0], sc.mask.shape[1])
        init_reports.append(evaluate_scene([Detection(c) for c in sc.corrupted_rings], sc.gt_rings, cfg))
        refined = [Detection(energy_refine(c, sc.afm)) for c in sc.corrupted_rings]
        ref_reports.append(evaluate_scene(refined, sc.gt_rings, cfg))
    a, b = aggregate(init_reports), aggregate(ref_reports)
    assert b["polis_mean"] < a["polis_mean"]
    assert b["mta_mean"] < a["mta_mean"], f"MTA {a['mta_mean']:.2f} -> {b['mta_mean']:.2f}"
