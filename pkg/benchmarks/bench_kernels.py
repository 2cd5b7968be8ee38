"""Time the compiled kernels against their numpy twins on typical inputs.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints one row per kernel with the best time of each backend and the speedup.
"""
import argparse
import timeit

import numpy as np

from polyfield import _kernels_py as py
from polyfield.synth import SceneSpec, render_scene

try:
    from polyfield import _kernels as cy
except ImportError:  # pragma: no cover
    cy = None


def workloads(rng):
    sc = render_scene(SceneSpec(seed=0, n_buildings=5))
    ring = np.ascontiguousarray(sc.gt_rings[0])
    pts = rng.uniform(0, 128, (4000, 2))
    a = rng.uniform(0, 128, (64, 2))
    b = np.roll(a, -1, axis=0)
    grid = rng.normal(size=(128, 128, 8))
    return {
        "nearest_on_segments 4000x64": lambda k: k.nearest_on_segments(pts, a, b),
        "rasterize 128x128": lambda k: k.rasterize(ring, 128, 128),
        "bilinear 4000 pts, 8 ch": lambda k: k.bilinear(grid, pts - 0.5),
        "afm_votes 128x128": lambda k: k.afm_votes(sc.afm, 1e-6),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    jobs = workloads(np.random.default_rng(0))
    print(f"{'kernel':32s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, fn in jobs.items():
        t_py = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat)) * 1e3
        if cy is None:
            print(f"{name:32s} {t_py:10.2f} {'n/a':>10s} {'':>8s}")
            continue
        t_cy = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:32s} {t_py:10.2f} {t_cy:10.2f} {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
