import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import star_ring
from oracles import bilinear_oracle, rasterize_oracle
from polyfield.errors import DimensionError
from polyfield.geometry import perimeter, reverse_ring, signed_area
from polyfield.raster import (
    bilinear_sample, bilinear_sample_many, boundary_pixels, iou, largest_component, rasterize, sample_at,
)


def test_bilinear_examples():
    g = np.arange(12, dtype=float).reshape(3, 4)
    assert bilinear_sample(g, (2, 1))[0] == g[1, 2]
    block = np.array([[0.0, 0.0], [1.0, 1.0]])
    assert bilinear_sample(block, (0.5, 0.5))[0] == 0.5
    const = np.full((5, 6, 3), 2.5)
    assert np.all(bilinear_sample(const, (3.3, 1.7)) == 2.5)


def test_bilinear_clamps():
    g = np.arange(12, dtype=float).reshape(3, 4)
    assert bilinear_sample(g, (-5, -5))[0] == g[0, 0]
    assert bilinear_sample(g, (10, 10))[0] == g[2, 3]


def test_bilinear_matches_scalar_oracle(rng):
    g = rng.normal(size=(7, 9, 2))
    pts = rng.uniform(-2, 11, (300, 2))
    vals, _, _ = bilinear_sample_many(g, pts)
    for p, v in zip(pts, vals):
        assert np.allclose(v, bilinear_oracle(g, p[0], p[1]), atol=1e-12)


@given(st.floats(0, 8, allow_nan=False), st.floats(0, 6, allow_nan=False), st.integers(0, 1000))
def test_bilinear_within_support(x, y, seed):
    g = np.random.default_rng(seed).normal(size=(7, 9))
    v = bilinear_sample(g, (x, y))[0]
    j0, i0 = min(int(x), 7), min(int(y), 5)
    support = g[i0:i0 + 2, j0:j0 + 2]
    assert support.min() - 1e-12 <= v <= support.max() + 1e-12


def test_bilinear_derivatives_match_differences(rng):
    g = rng.normal(size=(6, 6))
    pts = rng.integers(0, 5, (40, 2)) + rng.uniform(0.1, 0.9, (40, 2))
    _, gx, gy = bilinear_sample_many(g, pts)
    h = 1e-6
    for p, dx, dy in zip(pts, gx, gy):
        fx = (bilinear_sample(g, p + [h, 0])[0] - bilinear_sample(g, p - [h, 0])[0]) / (2 * h)
        fy = (bilinear_sample(g, p + [0, h])[0] - bilinear_sample(g, p - [0, h])[0]) / (2 * h)
        assert dx[0] == pytest.approx(fx, abs=1e-7) and dy[0] == pytest.approx(fy, abs=1e-7)


def test_sample_at_uses_pixel_centres():
    g = np.arange(12, dtype=float).reshape(3, 4)
    vals, _, _ = sample_at(g, [[2.5, 1.5]])
    assert vals[0, 0] == g[1, 2]


def test_rasterize_examples():
    full = rasterize([[0, 0], [6, 0], [6, 6], [0, 6]], 6, 6)
    assert full.all()
    sq = [[1, 1], [4, 1], [4, 4], [1, 4]]
    m = rasterize(sq, 6, 6)
    assert m.sum() == 9
    assert np.array_equal(m, rasterize_oracle(sq, 6, 6))
    assert m[1:4, 1:4].all()


def test_rasterize_boundary_centres_inside():
    # edge x = 1.5 passes through the centres of column 1
    m = rasterize([[1.5, 0.5], [3.5, 0.5], [3.5, 2.5], [1.5, 2.5]], 4, 5)
    assert np.array_equal(m, rasterize_oracle([[1.5, 0.5], [3.5, 0.5], [3.5, 2.5], [1.5, 2.5]], 4, 5))
    assert m[0, 1] and m[2, 3]


def test_rasterize_matches_oracle_random(rng):
    for _ in range(30):
        r = star_ring(rng, int(rng.integers(3, 9)), center=(8, 7), rmax=7)
        assert np.array_equal(rasterize(r, 14, 16), rasterize_oracle(r, 14, 16))


def test_rasterize_area_agrees_at_512():
    rng = np.random.default_rng(5)
    for _ in range(5):
        r = star_ring(rng, int(rng.integers(5, 12)), center=(256, 256), rmin=50, rmax=240)
        m = rasterize(r, 512, 512)
        assert abs(m.sum() - signed_area(r)) / 512**2 <= 2 * perimeter(r) / 512**2


def test_rasterize_orientation_free(rng):
    for _ in range(10):
        r = star_ring(rng, 7, center=(10, 10), rmax=9)
        assert np.array_equal(rasterize(r, 20, 20), rasterize(reverse_ring(r), 20, 20))


def test_iou_examples():
    a = np.zeros((3, 3), bool)
    a[0, 0:2] = True
    b = np.zeros((3, 3), bool)
    b[0, 1:3] = True
    assert iou(a, a) == 1.0
    assert iou(a, b) == pytest.approx(1 / 3)
    c = np.zeros((3, 3), bool)
    c[2, 2] = True
    assert iou(a, c) == 0.0
    assert iou(np.zeros((2, 2)), np.zeros((2, 2))) == 1.0
    with pytest.raises(DimensionError):
        iou(a, np.zeros((2, 2)))


@given(st.integers(0, 10_000))
def test_iou_symmetric(seed):
    r = np.random.default_rng(seed)
    a, b = r.random((6, 6)) < 0.4, r.random((6, 6)) < 0.4
    assert iou(a, b) == iou(b, a)
    if a.any():
        assert iou(a, a) == 1.0


def test_boundary_pixels_both_sides():
    m = np.zeros((7, 7), bool)
    m[2:5, 2:5] = True
    b = boundary_pixels(m)
    assert b[1, 1] and b[2, 2] and not b[3, 3] and not b[0, 0]
    assert b.sum() == 5 * 5 - 1


def test_largest_component_eight_connected():
    m = np.zeros((6, 6), bool)
    m[0, 0] = m[1, 1] = m[2, 2] = True  # diagonal chain: one component of 3
    m[4:6, 4:6] = True  # 4 pixels
    assert largest_component(m).sum() == 4
    m[3, 3] = True  # now joins the chain: 8 pixels
    assert largest_component(m).sum() == 8
