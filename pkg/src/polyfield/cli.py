"""``polyfield`` command line.

Exit codes: 0 success, 1 validation failure (a violated invariant or a
failed gradient check), 2 I/O, parse or placement failure.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

import numpy as np

from . import io
from .afm import encode_afm
from .corners import InitConfig, init_in_box
from .errors import FormatError, PlacementError
from .gradcheck import INSTANCES, run_all
from .metrics import DEFAULT_THRESHOLDS, EvalConfig, aggregate, evaluate_scene
from .raster import components
from .refine import RefineConfig, energy_refine, gcn_refine, load_weights
from .synth import SceneSpec, render_scene

log = logging.getLogger("polyfield")

LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging():
    name = os.environ.get("POLYFIELD_LOG", "error").strip().lower()
    logging.basicConfig(level=LOG_LEVELS.get(name, logging.ERROR), format="%(levelname)s %(name)s: %(message)s")
    if name not in LOG_LEVELS:
        log.error("POLYFIELD_LOG=%r not in %s; using error", name, sorted(LOG_LEVELS))


def _map(fn, items, parallel: int):
    if parallel > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def parse_thresholds(text: str) -> tuple:
    """``"0.5:0.95:0.05"`` (inclusive range) or a comma list ``"0.5,0.75"``."""
    try:
        if ":" in text:
            lo, hi, step = (float(t) for t in text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(math.floor((hi - lo) / step + 1e-9)) + 1
            return tuple(round(lo + k * step, 10) for k in range(n))
        return tuple(float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad IoU thresholds {text!r}") from None


# -- gen ---------------------------------------------------------------------

def _gen_one(seed, args):
    spec = SceneSpec(
        seed=seed, height=args.height, width=args.width, n_buildings=args.n,
        vertex_sigma=args.vertex_sigma, mask_flip_prob=args.flip_prob, separation=args.separation,
    )
    out = Path(args.out) if args.count == 1 else Path(args.out) / f"scene_{seed:06d}"
    io.write_bundle(out, render_scene(spec))
    return str(out)


def cmd_gen(args):
    seeds = [args.seed + k for k in range(args.count)]
    for path in _map(partial(_gen_one, args=args), seeds, args.parallel):
        log.info("wrote %s", path)
    return 0


# -- afm ---------------------------------------------------------------------

def cmd_afm(args):
    rings = io.read_rings(args.geojson)
    io.write_afm(args.out, encode_afm(rings, args.height, args.width))
    return 0


# -- init --------------------------------------------------------------------

def _init_config(args) -> InitConfig:
    return InitConfig(
        epsilon=args.epsilon, nms_radius=args.nms_radius,
        missing_dist=args.missing_dist, score_threshold=args.score_threshold,
    )


def _component_boxes(mask):
    labels, n = components(mask)
    boxes = []
    for k in range(1, n + 1):
        rows, cols = np.nonzero(labels == k)
        boxes.append((cols.min(), rows.min(), cols.max() + 1, rows.max() + 1))
    return boxes


def cmd_init(args):
    mask = io.read_mask(args.mask)
    convex, concave = io.read_prob(args.convex), io.read_prob(args.concave)
    if not (mask.shape == convex.shape == concave.shape):
        raise ValueError(f"mask/corner map sizes differ: {mask.shape}, {convex.shape}, {concave.shape}")
    if args.boxes:
        boxes = []
        for r in io.read_rings(args.boxes):
            boxes.append((r[:, 0].min(), r[:, 1].min(), r[:, 0].max(), r[:, 1].max()))
    else:
        boxes = _component_boxes(mask)
    cfg = _init_config(args)
    rings = [init_in_box(mask, convex, concave, box, cfg, args.margin) for box in boxes]
    log.info("initialized %d rings", len(rings))
    io.write_geojson(args.out, rings)
    return 0


# -- refine ------------------------------------------------------------------

def _refine_field(ring, field, cfg):
    return energy_refine(ring, field, cfg)


def _refine_gcn(ring, fmap, weights, cfg):
    return gcn_refine(ring, fmap, weights, cfg)


def cmd_refine(args):
    dets = io.read_geojson(args.geojson, require_simple=False)
    cfg = RefineConfig(steps=args.steps, lr=args.lr, iters=args.iters, lambda_ortho=args.lambda_ortho)
    if args.field:
        fn = partial(_refine_field, field=io.read_afm(args.field), cfg=cfg)
    else:
        if not (args.fmap and args.weights):
            raise ValueError("refine needs --field, or both --fmap and --weights")
        fn = partial(_refine_gcn, fmap=io.read_features(args.fmap), weights=load_weights(args.weights), cfg=cfg)
    rings = _map(fn, [d.ring for d in dets], args.parallel)
    io.write_geojson(args.out, rings, [d.score for d in dets])
    return 0


# -- eval --------------------------------------------------------------------

def _extent(ring_sets):
    pts = [r for rings in ring_sets for r in rings]
    if not pts:
        return 1, 1
    allp = np.concatenate(pts)
    return max(1, math.ceil(allp[:, 1].max())), max(1, math.ceil(allp[:, 0].max()))


def _eval_pair(pair, height, width, thresholds):
    pred_path, gt_path = pair
    dets = io.read_geojson(pred_path, require_simple=False)
    gts = io.read_rings(gt_path)
    h, w = _extent([[d.ring for d in dets], gts])
    cfg = EvalConfig(height or h, width or w, thresholds)
    return evaluate_scene(dets, gts, cfg)


def cmd_eval(args):
    if len(args.pred) != len(args.gt):
        raise ValueError(f"{len(args.pred)} prediction files but {len(args.gt)} ground-truth files")
    pairs = list(zip(args.pred, args.gt))
    fn = partial(_eval_pair, height=args.height, width=args.width, thresholds=args.iou_thresholds)
    reports = _map(fn, pairs, args.parallel)
    named = [(str(p), rep) for (p, _), rep in zip(pairs, reports)]
    io.write_report(args.out, named, aggregate(reports))
    if args.csv:
        io.write_report_csv(args.csv, named)
    return 0


# -- gradcheck ---------------------------------------------------------------

def cmd_gradcheck(args):
    ok = True
    for res in run_all(args.seed, args.instances):
        status = "ok" if res.passed else "FAIL"
        print(f"{res.name:12s} instances={res.instances} max_rel_err={res.max_rel_err:.3e} {status}")
        ok &= res.passed
    return 0 if ok else 1


# -- parser ------------------------------------------------------------------

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polyfield", description="Building footprint polygon toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate synthetic scene bundles")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--height", type=_positive_int, default=128)
    g.add_argument("--width", type=_positive_int, default=128)
    g.add_argument("--n", type=int, default=3, help="buildings per scene")
    g.add_argument("--vertex-sigma", type=float, default=0.0)
    g.add_argument("--flip-prob", type=float, default=0.0)
    g.add_argument("--separation", type=int, default=2)
    g.add_argument("--count", type=_positive_int, default=1, help="scenes to generate (seeds seed..seed+count-1)")
    g.add_argument("--parallel", type=_positive_int, default=1)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    a = sub.add_parser("afm", help="encode rings into an attraction field")
    a.add_argument("--geojson", required=True)
    a.add_argument("--height", type=_positive_int, required=True)
    a.add_argument("--width", type=_positive_int, required=True)
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_afm)

    d = InitConfig()
    i = sub.add_parser("init", help="initial polygons from a mask and corner maps")
    i.add_argument("--mask", required=True)
    i.add_argument("--convex", required=True)
    i.add_argument("--concave", required=True)
    i.add_argument("--boxes", help="GeoJSON whose ring extents are the regions of interest")
    i.add_argument("--epsilon", type=float, default=d.epsilon)
    i.add_argument("--nms-radius", type=float, default=d.nms_radius)
    i.add_argument("--score-threshold", type=float, default=d.score_threshold)
    i.add_argument("--missing-dist", type=float, default=d.missing_dist)
    i.add_argument("--margin", type=int, default=2)
    i.add_argument("--out", required=True)
    i.set_defaults(func=cmd_init)

    rc = RefineConfig()
    r = sub.add_parser("refine", help="refine polygons with a field or a GCN")
    r.add_argument("--geojson", required=True)
    r.add_argument("--field", help="AFM file (energy refiner)")
    r.add_argument("--fmap", help="feature grid .npy (GCN refiner)")
    r.add_argument("--weights", help="GCN weights file (GCN refiner)")
    r.add_argument("--steps", type=_positive_int, default=rc.steps)
    r.add_argument("--lr", type=float, default=rc.lr)
    r.add_argument("--iters", type=_positive_int, default=rc.iters)
    r.add_argument("--lambda-ortho", type=float, default=rc.lambda_ortho)
    r.add_argument("--parallel", type=_positive_int, default=1)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_refine)

    e = sub.add_parser("eval", help="evaluate predictions against ground truth")
    e.add_argument("--pred", nargs="+", required=True)
    e.add_argument("--gt", nargs="+", required=True)
    e.add_argument("--height", type=_positive_int)
    e.add_argument("--width", type=_positive_int)
    e.add_argument("--iou-thresholds", type=parse_thresholds, default=DEFAULT_THRESHOLDS)
    e.add_argument("--parallel", type=_positive_int, default=1)
    e.add_argument("--out", required=True)
    e.add_argument("--csv")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("gradcheck", help="finite-difference check of every analytic gradient")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--instances", type=_positive_int, default=INSTANCES)
    c.set_defaults(func=cmd_gradcheck)
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, FormatError, PlacementError) as exc:
        print(f"polyfield: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"polyfield: invalid input: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
