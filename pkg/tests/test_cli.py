import json

import numpy as np
import pytest

from polyfield import io
from polyfield.cli import main, parse_thresholds
from polyfield.raster import boundary_pixels
from polyfield.afm import decode_afm
from polyfield.refine import random_weights, save_weights, zero_head
from polyfield.synth import SceneSpec, render_scene


def _files(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


def test_gen_deterministic(tmp_path):
    assert main(["gen", "--seed", "4", "--out", str(tmp_path / "a")]) == 0
    assert main(["gen", "--seed", "4", "--out", str(tmp_path / "b")]) == 0
    assert _files(tmp_path / "a") == _files(tmp_path / "b")
    gt = io.read_rings(tmp_path / "a" / "gt.geojson")
    for r, g in zip(gt, render_scene(SceneSpec(seed=4)).gt_rings):
        assert np.abs(r - g).max() <= 1e-9


def test_gen_batch_parallel_matches_serial(tmp_path):
    assert main(["gen", "--seed", "0", "--count", "3", "--out", str(tmp_path / "s")]) == 0
    assert main(["gen", "--seed", "0", "--count", "3", "--parallel", "2", "--out", str(tmp_path / "p")]) == 0
    assert _files(tmp_path / "s") == _files(tmp_path / "p")
    assert len(list((tmp_path / "s").iterdir())) == 3


def test_gen_placement_failure(tmp_path, capsys):
    code = main(["gen", "--n", "50", "--height", "32", "--width", "32", "--out", str(tmp_path / "x")])
    assert code == 2
    assert "placed" in capsys.readouterr().err


def test_missing_input_is_io_error(tmp_path, capsys):
    code = main(["afm", "--geojson", str(tmp_path / "nope.geojson"), "--height", "8", "--width", "8",
                 "--out", str(tmp_path / "f.afm")])
    assert code == 2
    assert "nope.geojson" in capsys.readouterr().err


def test_parse_error_names_position(tmp_path, capsys):
    bad = tmp_path / "bad.geojson"
    bad.write_text('{"type": "FeatureCollection",\n "features": [}\n')
    code = main(["afm", "--geojson", str(bad), "--height", "8", "--width", "8", "--out", str(tmp_path / "f")])
    assert code == 2
    err = capsys.readouterr().err
    assert "bad.geojson" in err and "line 2" in err


def test_validation_error_exit_1(tmp_path, capsys):
    bowtie = tmp_path / "bow.geojson"
    io.write_geojson(bowtie, [np.array([[0, 0], [4, 4], [4, 0], [0, 4]], float)])
    code = main(["afm", "--geojson", str(bowtie), "--height", "8", "--width", "8", "--out", str(tmp_path / "f")])
    assert code == 1
    assert "not simple" in capsys.readouterr().err


def test_afm_round_trip(tmp_path):
    sc = render_scene(SceneSpec(seed=9, n_buildings=2))
    io.write_geojson(tmp_path / "gt.geojson", sc.gt_rings)
    assert main(["afm", "--geojson", str(tmp_path / "gt.geojson"), "--height", "128", "--width", "128",
                 "--out", str(tmp_path / "f.afm")]) == 0
    field = io.read_afm(tmp_path / "f.afm")
    b = boundary_pixels(sc.mask)
    assert (b & decode_afm(field, 2)).sum() / b.sum() >= 0.99


def test_init_refine_eval_pipeline(tmp_path):
    d = tmp_path / "scene"
    assert main(["gen", "--seed", "2", "--n", "3", "--vertex-sigma", "2", "--out", str(d)]) == 0
    assert main(["init", "--mask", str(d / "mask.pgm"), "--convex", str(d / "convex.pgm"),
                 "--concave", str(d / "concave.pgm"), "--epsilon", "1.0", "--nms-radius", "3",
                 "--score-threshold", "0.5", "--missing-dist", "3", "--out", str(tmp_path / "init.geojson")]) == 0
    assert main(["refine", "--geojson", str(d / "corrupted.geojson"), "--field", str(d / "field.afm"),
                 "--lr", "0.5", "--iters", "100", "--lambda-ortho", "1", "--out", str(tmp_path / "ref.geojson")]) == 0
    assert main(["eval", "--pred", str(tmp_path / "init.geojson"), str(d / "corrupted.geojson"),
                 str(tmp_path / "ref.geojson"), "--gt", str(d / "gt.geojson"), str(d / "gt.geojson"),
                 str(d / "gt.geojson"), "--height", "128", "--width", "128", "--iou-thresholds", "0.5:0.95:0.05",
                 "--out", str(tmp_path / "rep.json"), "--csv", str(tmp_path / "rep.csv")]) == 0
    doc = json.loads((tmp_path / "rep.json").read_text())
    init, corrupted, refined = doc["scenes"]
    assert init["polis_mean"] < 0.5
    assert refined["polis_mean"] < corrupted["polis_mean"]
    assert len((tmp_path / "rep.csv").read_text().splitlines()) == 4


def test_eval_self_is_perfect(tmp_path):
    sc = render_scene(SceneSpec(seed=1))
    gt = tmp_path / "gt.geojson"
    io.write_geojson(gt, sc.gt_rings)
    assert main(["eval", "--pred", str(gt), "--gt", str(gt), "--out", str(tmp_path / "r.json")]) == 0
    agg = json.loads((tmp_path / "r.json").read_text())["aggregate"]
    assert agg["polis_mean"] == 0.0 and agg["mta_mean"] == 0.0 and agg["ap"] == 1.0


def test_refine_zero_head_identity(tmp_path, rng):
    sc = render_scene(SceneSpec(seed=6, vertex_sigma=1.0))
    src = tmp_path / "in.geojson"
    io.write_geojson(src, sc.corrupted_rings)
    fmap = rng.normal(size=(128, 128, 3))
    io.write_features(tmp_path / "f.npy", fmap)
    save_weights(zero_head(random_weights(rng, 5, (8,))), tmp_path / "w.json")
    assert main(["refine", "--geojson", str(src), "--fmap", str(tmp_path / "f.npy"), "--weights",
                 str(tmp_path / "w.json"), "--steps", "3", "--out", str(tmp_path / "out.geojson")]) == 0
    for a, b in zip(io.read_rings(src, False), io.read_rings(tmp_path / "out.geojson", False)):
        assert np.abs(a - b).max() <= 1e-9


def test_refine_needs_a_source(tmp_path):
    src = tmp_path / "in.geojson"
    io.write_geojson(src, render_scene(SceneSpec(seed=0)).gt_rings)
    assert main(["refine", "--geojson", str(src), "--out", str(tmp_path / "o")]) == 1


def test_refine_deterministic_parallel(tmp_path):
    d = tmp_path / "s"
    main(["gen", "--seed", "8", "--vertex-sigma", "2", "--out", str(d)])
    args = ["refine", "--geojson", str(d / "corrupted.geojson"), "--field", str(d / "field.afm"), "--iters", "50"]
    assert main(args + ["--out", str(tmp_path / "a.geojson")]) == 0
    assert main(args + ["--parallel", "2", "--out", str(tmp_path / "b.geojson")]) == 0
    assert (tmp_path / "a.geojson").read_bytes() == (tmp_path / "b.geojson").read_bytes()


def test_gradcheck_command(capsys):
    assert main(["gradcheck", "--instances", "5"]) == 0
    out = capsys.readouterr().out
    assert out.count(" ok") == 5


def test_parse_thresholds():
    assert parse_thresholds("0.5:0.95:0.05") == (0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95)
    assert parse_thresholds("0.5,0.75") == (0.5, 0.75)
    with pytest.raises(Exception):
        parse_thresholds("a:b")


def test_log_env(monkeypatch, tmp_path):
    monkeypatch.setenv("POLYFIELD_LOG", "debug")
    assert main(["gen", "--seed", "1", "--out", str(tmp_path / "x")]) == 0
