import json

import numpy as np
import pytest

from ascfmap.cli import main
from ascfmap.tensor import FeatureMap, SampleFormat, read_fmap, write_fmap

from conftest import random_map


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def int8_map(tmp_path, rng):
    path = tmp_path / "in.fmap"
    fmap = random_map(rng, SampleFormat.INT8, (8, 8, 8), nonneg=True, zero_frac=0.3)
    write_fmap(path, fmap)
    return path, fmap


def test_encode_reports_nominal(capsys, tmp_path, int8_map):
    src, _ = int8_map
    code, out, _ = run(capsys, "encode", src, tmp_path / "o.asc", "--block-size", 16, "--endpoints", 2)
    assert code == 0
    report = json.loads(out)
    assert report["nominal"] == 2.0 and report["measured_exact"] == "2"


def test_round_trip_and_stats(capsys, tmp_path, int8_map):
    src, fmap = int8_map
    stream, recon = tmp_path / "o.asc", tmp_path / "r.fmap"
    assert run(capsys, "encode", src, stream, "--block-shape", "2x2x4", "--reorder", "heuristic")[0] == 0
    assert run(capsys, "decode", stream, recon)[0] == 0
    assert read_fmap(recon).dims == fmap.dims
    code, out, _ = run(capsys, "stats", src, recon, "--stream", stream)
    report = json.loads(out)
    assert code == 0 and report["max_abs_error"] <= 127
    assert sum(report["scale_usage"].values()) == 4 * 4 * 2


def test_vbr_zeros_survive(capsys, tmp_path, int8_map):
    src, fmap = int8_map
    stream, recon = tmp_path / "o.asc", tmp_path / "r.fmap"
    assert run(capsys, "encode", src, stream, "--vbr", "--endpoints", 1)[0] == 0
    assert run(capsys, "decode", stream, recon)[0] == 0
    z = fmap.raster() == 0
    assert np.all(read_fmap(recon).raster()[z] == 0)


def test_vbr_all_zero_rate(capsys, tmp_path):
    src = tmp_path / "z.fmap"
    write_fmap(src, FeatureMap(SampleFormat.INT16, np.zeros((2, 3, 4), np.int16)))
    code, out, _ = run(capsys, "encode", src, tmp_path / "z.asc", "--vbr")
    assert code == 0 and json.loads(out)["measured"] == 16.0


def test_identical_stats(capsys, int8_map):
    src, _ = int8_map
    code, out, _ = run(capsys, "stats", src, src)
    assert code == 0 and json.loads(out)["psnr"] == "inf"


def test_mode_violation_exit(capsys, tmp_path):
    src = tmp_path / "neg.fmap"
    write_fmap(src, FeatureMap(SampleFormat.INT8, np.full((1, 1, 16), -1, np.int8)))
    code, _, err = run(capsys, "encode", src, tmp_path / "x.asc", "--endpoints", 1)
    assert code != 0 and "ModeViolation" in err


def test_corrupt_stream_exit(capsys, tmp_path):
    bad = tmp_path / "bad.asc"
    bad.write_bytes(b"NOPE" + bytes(30))
    code, _, err = run(capsys, "decode", bad, tmp_path / "x.fmap")
    assert code != 0 and "BadMagic" in err
    code, _, err = run(capsys, "decode", tmp_path / "missing.asc", tmp_path / "x.fmap")
    assert code != 0


@pytest.mark.parametrize("n, expect", [(16, [2, 2, 4]), (64, [4, 4, 4]), (2, [1, 1, 2])])
def test_shape(capsys, n, expect):
    code, out, _ = run(capsys, "shape", n)
    got = json.loads(out)
    assert code == 0 and [got["w"], got["h"], got["c"]] == expect


def test_reorder_and_permutation_file(capsys, tmp_path, int8_map):
    src, fmap = int8_map
    perm_file = tmp_path / "perm.json"
    code, out, _ = run(capsys, "reorder", src, "--method", "greedy", "-o", perm_file)
    assert code == 0 and sorted(json.loads(out)) == list(range(8))
    stream, recon = tmp_path / "o.asc", tmp_path / "r.fmap"
    assert run(capsys, "encode", src, stream, "--permutation", perm_file)[0] == 0
    assert run(capsys, "decode", stream, recon)[0] == 0
    assert read_fmap(recon).dims == fmap.dims


def test_reorder_methods_differ(capsys, tmp_path):
    # channels built so their similarity matrix follows the 4-channel example shape
    rng = np.random.default_rng(3)
    base = rng.standard_normal((2, 256))
    a = base[0]
    b = 0.95 * a + 0.3 * base[1]
    c = 0.9 * a - 0.4 * base[1]
    d = rng.standard_normal(256)
    d -= (d @ a) / (a @ a) * a
    d += 0.25 * base[1]
    planes = np.round(np.stack([a, b, c, d]) * 1000).astype(np.int16)
    src = tmp_path / "cal.fmap"
    write_fmap(src, FeatureMap(SampleFormat.INT16, planes.reshape(4, 16, 16)))
    orders = {}
    for method in ("greedy", "heuristic"):
        code, out, _ = run(capsys, "reorder", src, "--method", method)
        orders[method] = json.loads(out)
    assert orders["greedy"] != orders["heuristic"]


def test_hw_report(capsys):
    code, out, _ = run(capsys, "hw-report", "--no-check")
    report = json.loads(out)
    assert code == 0
    shifted = report["variants"]["revised-shifted"]
    assert (shifted["dividers"], shifted["multipliers"], shifted["adders"]) == (0, 5, 2)
    code, out, _ = run(capsys, "hw-report", "--format", "text", "--no-check")
    assert code == 0 and "revised-shifted" in out
