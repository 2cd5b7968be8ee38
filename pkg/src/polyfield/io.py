"""File formats: GeoJSON polygons, PGM masks, AFM fields, feature grids, reports.

All writers are deterministic: equal inputs give byte-identical files.
"""
from __future__ import annotations

import csv
import json
import struct
from functools import partial
from pathlib import Path

import numpy as np

from .afm import as_field
from .errors import DimensionError, FormatError, GeometryError
from .geometry import as_ring, is_simple
from .metrics import Detection
from .raster import as_features, as_mask, as_prob

COORD_DECIMALS = 9
AFM_MAGIC = b"AFM1"
_AFM_HEADER = struct.Struct("<4sII")


# -- GeoJSON -----------------------------------------------------------------

def _closed(ring):
    pts = [[round(float(x), COORD_DECIMALS), round(float(y), COORD_DECIMALS)] for x, y in ring]
    return pts + [pts[0]]


def dumps_geojson(rings, scores=None) -> str:
    """FeatureCollection with one Polygon per ring, coordinates in pixels.

    ``scores`` (optional, one per ring) is stored as the ``score`` property.
    """
    if scores is not None and len(scores) != len(rings):
        raise ValueError("one score per ring is required")
    features = []
    for k, ring in enumerate(rings):
        props = {} if scores is None else {"score": float(scores[k])}
        features.append({
            "type": "Feature",
            "properties": props,
            "geometry": {"type": "Polygon", "coordinates": [_closed(np.asarray(ring))]},
        })
    return json.dumps({"type": "FeatureCollection", "features": features}, indent=1) + "\n"


def write_geojson(path, rings, scores=None) -> None:
    Path(path).write_text(dumps_geojson(rings, scores), encoding="utf-8")


def write_detections(path, dets) -> None:
    write_geojson(path, [d.ring for d in dets], [d.score for d in dets])


def loads_geojson(text: str, where: str = "<geojson>", require_simple: bool = True) -> list[Detection]:
    """Parse a FeatureCollection of Polygons into detections (score 1.0 when absent).

    Rings are CCW-normalized. Holes and other geometry types are rejected, as
    are self-intersecting rings unless ``require_simple`` is off (predictions
    may legitimately self-intersect; ground truth may not).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})", where) from None
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise FormatError("top level must be a FeatureCollection", where)
    feats = doc.get("features")
    if not isinstance(feats, list):
        raise FormatError("FeatureCollection has no features list", where)
    out = []
    for k, feat in enumerate(feats):
        try:
            geom = feat["geometry"]
            if geom["type"] != "Polygon":
                raise FormatError(f"feature {k}: geometry type {geom['type']!r} is not Polygon", where)
            coords = geom["coordinates"]
            props = feat.get("properties") or {}
        except (KeyError, TypeError):
            raise FormatError(f"feature {k}: missing geometry", where) from None
        if not isinstance(coords, list) or len(coords) != 1:
            raise FormatError(f"feature {k}: expected exactly one (outer) ring", where)
        try:
            ring = as_ring(coords[0])
        except GeometryError as exc:
            raise FormatError(f"feature {k}: {exc}", where) from None
        except (TypeError, ValueError):
            raise FormatError(f"feature {k}: coordinates are not numeric pairs", where) from None
        if require_simple and not is_simple(ring):
            raise GeometryError(f"{where}: feature {k}: ring is not simple (self-intersection)")
        score = props.get("score", 1.0)
        try:
            out.append(Detection(ring, float(score)))
        except (TypeError, ValueError) as exc:
            raise FormatError(f"feature {k}: bad score ({exc})", where) from None
    return out


def read_geojson(path, require_simple: bool = True) -> list[Detection]:
    return loads_geojson(Path(path).read_text(encoding="utf-8"), str(path), require_simple)


def read_rings(path, require_simple: bool = True) -> list[np.ndarray]:
    return [d.ring for d in read_geojson(path, require_simple)]


# -- PGM ---------------------------------------------------------------------

def _pgm_bytes(values: np.ndarray) -> bytes:
    h, w = values.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + values.astype(np.uint8).tobytes()


def _pgm_header(data: bytes, where):
    fields, pos = [], 0
    while len(fields) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise FormatError(f"truncated header at byte {pos}", where)
        if data[pos:pos + 1] == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append((data[start:pos], start))
    magic, (w, wpos), (h, hpos), (mx, mpos) = fields[0][0], fields[1], fields[2], fields[3]
    if magic != b"P5":
        raise FormatError(f"not a binary PGM (magic {magic!r} at byte 0)", where)
    try:
        w, h, mx = int(w), int(h), int(mx)
    except ValueError:
        raise FormatError(f"non-numeric header field near byte {min(wpos, hpos, mpos)}", where) from None
    if w < 1 or h < 1 or not 0 < mx < 65536:
        raise FormatError(f"invalid dimensions or maxval ({w}x{h}, {mx})", where)
    return h, w, mx, pos + 1


def read_pgm(path) -> tuple[np.ndarray, int]:
    """Raw samples and maxval of a binary (P5) graymap."""
    where = str(path)
    data = Path(path).read_bytes()
    h, w, mx, off = _pgm_header(data, where)
    dtype = np.dtype(">u2") if mx > 255 else np.dtype(np.uint8)
    need = h * w * dtype.itemsize
    if len(data) - off < need:
        raise FormatError(f"pixel data truncated: need {need} bytes at offset {off}, have {len(data) - off}", where)
    return np.frombuffer(data, dtype=dtype, count=h * w, offset=off).reshape(h, w).astype(np.int64), mx


def write_mask(path, mask) -> None:
    m = as_mask(mask)
    Path(path).write_bytes(_pgm_bytes(np.where(m, 255, 0)))


def read_mask(path) -> np.ndarray:
    """Foreground is any sample at or above half of maxval."""
    vals, mx = read_pgm(path)
    return 2 * vals >= mx


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".f32")


def write_prob(path, prob, sidecar: bool = True) -> None:
    """Probability map as an 8-bit PGM plus (optionally) a raw float32 LE sidecar."""
    p = as_prob(prob)
    Path(path).write_bytes(_pgm_bytes(np.rint(p * 255.0)))
    if sidecar:
        sidecar_path(path).write_bytes(p.astype("<f4").tobytes())


def read_prob(path) -> np.ndarray:
    """Read a probability map, preferring the lossless sidecar when present."""
    vals, mx = read_pgm(path)
    side = sidecar_path(path)
    if side.exists():
        raw = side.read_bytes()
        if len(raw) != 4 * vals.size:
            raise FormatError(f"sidecar holds {len(raw)} bytes, expected {4 * vals.size}", str(side))
        return np.frombuffer(raw, dtype="<f4").reshape(vals.shape).astype(np.float64)
    return vals / float(mx)


# -- AFM ---------------------------------------------------------------------

def afm_bytes(field) -> bytes:
    f = as_field(field)
    h, w, _ = f.shape
    return _AFM_HEADER.pack(AFM_MAGIC, h, w) + f.astype("<f4").tobytes()


def write_afm(path, field) -> None:
    Path(path).write_bytes(afm_bytes(field))


def parse_afm(data: bytes, where: str = "<afm>") -> np.ndarray:
    if len(data) < _AFM_HEADER.size:
        raise FormatError(f"file is {len(data)} bytes, shorter than the {_AFM_HEADER.size}-byte header", where)
    magic, h, w = _AFM_HEADER.unpack_from(data)
    if magic != AFM_MAGIC:
        raise FormatError(f"bad magic {magic!r} at byte 0", where)
    if h < 1 or w < 1:
        raise FormatError(f"invalid dimensions {h}x{w} at byte 4", where)
    need = 8 * h * w
    body = len(data) - _AFM_HEADER.size
    if body != need:
        raise FormatError(f"expected {need} payload bytes after byte {_AFM_HEADER.size}, found {body}", where)
    vals = np.frombuffer(data, dtype="<f4", offset=_AFM_HEADER.size).reshape(h, w, 2)
    if not np.all(np.isfinite(vals)):
        raise FormatError("field contains non-finite vectors", where)
    return vals.astype(np.float64)


def read_afm(path) -> np.ndarray:
    return parse_afm(Path(path).read_bytes(), str(path))


# -- feature grids -----------------------------------------------------------

def write_features(path, grid) -> None:
    with open(path, "wb") as fh:
        np.save(fh, as_features(grid), allow_pickle=False)


def read_features(path) -> np.ndarray:
    try:
        arr = np.load(path, allow_pickle=False)
    except ValueError as exc:
        raise FormatError(f"not a numeric .npy array ({exc})", str(path)) from None
    try:
        return as_features(arr)
    except (DimensionError, ValueError) as exc:
        raise FormatError(str(exc), str(path)) from None


# -- reports -----------------------------------------------------------------

REPORT_COLUMNS = ("scene", "precision", "recall", "polis_mean", "mta_mean", "ap", "ar", "matches")


def report_document(named_reports, aggregate: dict) -> dict:
    return {
        "scenes": [{"scene": name, **rep.to_dict()} for name, rep in named_reports],
        "aggregate": aggregate,
    }


def write_report(path, named_reports, aggregate: dict) -> None:
    doc = report_document(named_reports, aggregate)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_report_csv(path, named_reports) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(REPORT_COLUMNS)
        for name, rep in named_reports:
            out.writerow([
                name, repr(rep.precision), repr(rep.recall),
                "" if rep.polis_mean is None else repr(rep.polis_mean),
                "" if rep.mta_mean is None else repr(rep.mta_mean),
                repr(rep.ap), repr(rep.ar), len(rep.per_instance),
            ])


def read_report_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for key in REPORT_COLUMNS[1:-1]:
            row[key] = float(row[key]) if row[key] else None
        row["matches"] = int(row["matches"])
    return rows


# -- scene bundles -----------------------------------------------------------

BUNDLE_FILES = {
    "gt": "gt.geojson",
    "corrupted": "corrupted.geojson",
    "mask": "mask.pgm",
    "convex": "convex.pgm",
    "concave": "concave.pgm",
    "field": "field.afm",
}


def write_bundle(out_dir, scene) -> None:
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    write_geojson(d / BUNDLE_FILES["gt"], scene.gt_rings)
    write_geojson(d / BUNDLE_FILES["corrupted"], scene.corrupted_rings)
    write_mask(d / BUNDLE_FILES["mask"], scene.mask)
    write_prob(d / BUNDLE_FILES["convex"], scene.convex_map)
    write_prob(d / BUNDLE_FILES["concave"], scene.concave_map)
    write_afm(d / BUNDLE_FILES["field"], scene.afm)


def read_bundle(in_dir) -> dict:
    """Load every bundle file present; raster files must agree on H, W."""
    d = Path(in_dir)
    out = {}
    readers = {
        "gt": read_rings, "corrupted": partial(read_rings, require_simple=False), "mask": read_mask,
        "convex": read_prob, "concave": read_prob, "field": read_afm,
    }
    for key, name in BUNDLE_FILES.items():
        if (d / name).exists():
            out[key] = readers[key](d / name)
    shapes = {k: out[k].shape[:2] for k in ("mask", "convex", "concave", "field") if k in out}
    if len(set(shapes.values())) > 1:
        raise DimensionError(f"{d}: bundle rasters disagree on size: {shapes}")
    return out
