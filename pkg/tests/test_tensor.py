import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ascfmap.errors import BadMagic, CorruptStream, InvalidArgument, InvalidSample, Truncated
from ascfmap.tensor import (
    Block,
    BlockShape,
    FeatureMap,
    SampleFormat,
    block_origins,
    derive_cubical_shape,
    load_fmap,
    partition,
    partition_array,
    reassemble,
    store_fmap,
)


def ids_map(w, h, c, fmt=SampleFormat.INT16):
    """Map whose sample at (w, h, c) is 100*c + 10*h + w."""
    cc, hh, ww = np.meshgrid(range(c), range(h), range(w), indexing="ij")
    return FeatureMap(fmt, 100 * cc + 10 * hh + ww)


@pytest.mark.parametrize(
    "size, shape",
    [(2, (1, 1, 2)), (4, (2, 2, 1)), (8, (2, 2, 2)), (16, (2, 2, 4)), (32, (4, 4, 2)),
     (64, (4, 4, 4)), (1024, (8, 8, 16))],
)
def test_cubical_shape(size, shape):
    assert derive_cubical_shape(size) == BlockShape(*shape)


@pytest.mark.parametrize("bad", [0, 1, 3, 6, 12, -4])
def test_cubical_shape_rejects(bad):
    with pytest.raises(InvalidArgument):
        derive_cubical_shape(bad)


@pytest.mark.parametrize("k", range(1, 21))
def test_cubical_shape_invariants(k):
    s = derive_cubical_shape(2 ** k)
    assert s.size == 2 ** k
    assert s.w == s.h
    assert s.c <= 2 * s.w


def test_block_shape_needs_power_of_two():
    with pytest.raises(InvalidArgument):
        BlockShape(3, 1, 1)
    assert BlockShape.parse("2x2x4") == BlockShape(2, 2, 4)


def test_partition_exact_tiling():
    fmap = ids_map(4, 4, 4)
    blocks = partition(fmap, BlockShape(2, 2, 4))
    assert [b.origin for b in blocks] == [(0, 0, 0), (2, 0, 0), (0, 2, 0), (2, 2, 0)]
    second = blocks[1].values
    expected = [100 * c + 10 * h + w for c in range(4) for h in range(2) for w in (2, 3)]
    assert second.tolist() == expected


def test_partition_replicates_edges():
    fmap = ids_map(3, 3, 4)
    blocks = partition(fmap, BlockShape(2, 2, 4))
    assert len(blocks) == 4
    right = blocks[1]
    assert right.origin == (2, 0, 0)
    # column 3 repeats column 2
    assert right.values.tolist() == [100 * c + 10 * h + 2 for c in range(4) for h in range(2) for _ in range(2)]
    corner = blocks[3]
    assert corner.values.tolist() == [100 * c + 22 for c in range(4) for _ in range(4)]


def test_partition_single_column():
    fmap = FeatureMap(SampleFormat.INT8, np.arange(1, 9).reshape(8, 1, 1))
    blocks = partition(fmap, BlockShape(2, 2, 2))
    assert len(blocks) == 4
    for k, blk in enumerate(blocks):
        a, b = 2 * k + 1, 2 * k + 2
        assert blk.values.tolist() == [a] * 4 + [b] * 4


def test_reassemble_roundtrip(rng):
    fmap = FeatureMap(SampleFormat.INT8, rng.integers(-128, 128, (3, 7, 5)))
    assert reassemble(partition(fmap, BlockShape(2, 2, 2)), fmap.dims, fmap.format) == fmap


def test_reassemble_single_block():
    fmap = ids_map(2, 2, 2)
    blocks = partition(fmap, BlockShape(2, 2, 2))
    assert len(blocks) == 1
    assert blocks[0].values.tolist() == fmap.raster().tolist()
    assert reassemble(blocks, fmap.dims, fmap.format) == fmap


def test_reassemble_rejects_permuted_or_missing(rng):
    fmap = FeatureMap(SampleFormat.INT8, rng.integers(-128, 128, (3, 7, 5)))
    blocks = partition(fmap, BlockShape(2, 2, 2))
    shuffled = blocks[1:2] + blocks[:1] + blocks[2:]
    with pytest.raises(CorruptStream):
        reassemble(shuffled, fmap.dims, fmap.format)
    with pytest.raises(CorruptStream):
        reassemble(blocks[:-1], fmap.dims, fmap.format)
    with pytest.raises(CorruptStream):
        reassemble(blocks + blocks[-1:], fmap.dims, fmap.format)


dims = st.tuples(st.integers(1, 9), st.integers(1, 9), st.integers(1, 9))
shapes = st.tuples(st.sampled_from([1, 2, 4]), st.sampled_from([1, 2, 4]), st.sampled_from([1, 2, 4, 8]))


@settings(max_examples=200, deadline=None)
@given(dims, shapes, st.integers(0, 2**32 - 1))
def test_partition_reassemble_property(d, s, seed):
    fmap = FeatureMap(SampleFormat.INT16, np.random.default_rng(seed).integers(-30000, 30000, d[::-1]))
    shape = BlockShape(*s)
    assert reassemble(partition(fmap, shape), fmap.dims, fmap.format) == fmap


@settings(max_examples=100, deadline=None)
@given(dims, shapes)
def test_partition_covers_each_sample_once(d, s):
    w, h, c = d
    shape = BlockShape(*s)
    ids = np.arange(w * h * c).reshape(c, h, w)
    arr = partition_array(ids, shape)
    seen = np.zeros(w * h * c, dtype=int)
    offsets = [(x, y, z) for z in range(shape.c) for y in range(shape.h) for x in range(shape.w)]
    for row, (ow, oh, oc) in zip(arr, block_origins(d, shape)):
        for val, (x, y, z) in zip(row, offsets):
            gw, gh, gc = ow + x, oh + y, oc + z
            if gw < w and gh < h and gc < c:
                assert val == ids[gc, gh, gw]
                seen[val] += 1
    assert (seen == 1).all()


# --- .fmap files -----------------------------------------------------------

FIXTURE = (
    b"FMAP\x01\x00\x00"
    + struct.pack("<III", 2, 2, 4)
    + bytes([0x00, 0x01, 0x7F, 0x80, 0xFF, 0xFE, 0x10, 0x20, 0x05, 0x06, 0x07, 0x08, 0x81, 0x82, 0x83, 0x84])
)


def test_fmap_fixture():
    fmap = load_fmap(FIXTURE)
    assert fmap.format is SampleFormat.INT8
    assert fmap.dims == (2, 2, 4)
    # channel 0: rows (0, 1), (127, -128); channel 1: (-1, -2), (16, 32) ...
    assert fmap.data[0].tolist() == [[0, 1], [127, -128]]
    assert fmap.data[1].tolist() == [[-1, -2], [16, 32]]
    assert fmap.data[2].tolist() == [[5, 6], [7, 8]]
    assert fmap.data[3].tolist() == [[-127, -126], [-125, -124]]
    assert store_fmap(fmap) == FIXTURE


def test_fmap_truncated():
    blob = b"FMAP\x01\x00\x00" + struct.pack("<III", 2, 2, 1) + b"\x01\x02\x03"
    with pytest.raises(Truncated):
        load_fmap(blob)
    with pytest.raises(Truncated):
        load_fmap(FIXTURE[:10])


def test_fmap_bad_magic():
    with pytest.raises(BadMagic):
        load_fmap(b"FMAQ" + FIXTURE[4:])


def test_fmap_trailing_bytes():
    with pytest.raises(CorruptStream):
        load_fmap(FIXTURE + b"\x00")


@pytest.mark.parametrize("bits", [0x7E00, 0x7C00, 0xFC00])
def test_fmap_rejects_nan_and_inf(bits):
    blob = b"FMAP\x01\x02\x00" + struct.pack("<III", 1, 1, 1) + struct.pack("<H", bits)
    with pytest.raises(InvalidSample):
        load_fmap(blob)


def test_fmap_fp16_layout():
    fmap = FeatureMap(SampleFormat.FP16, np.array([[[1.5, -0.0]]], dtype=np.float16))
    blob = store_fmap(fmap)
    assert blob[-4:] == struct.pack("<HH", 0x3E00, 0x8000)
    back = load_fmap(blob)
    assert back == fmap
    assert back.data.view(np.uint16)[0, 0, 1] == 0x8000


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(list(SampleFormat)), dims, st.integers(0, 2**32 - 1))
def test_fmap_roundtrip_property(fmt, d, seed):
    raw = np.random.default_rng(seed).integers(0, 256, d[0] * d[1] * d[2] * fmt.bit_width // 8, dtype=np.uint8)
    data = raw.view(fmt.dtype)
    if fmt.is_float:
        data = np.where(np.isfinite(data), data, np.float16(0))
    fmap = FeatureMap.from_raster(fmt, *d, data)
    assert load_fmap(store_fmap(fmap)) == fmap


def test_feature_map_is_immutable():
    fmap = ids_map(2, 2, 1)
    with pytest.raises(ValueError):
        fmap.data[0, 0, 0] = 5
    with pytest.raises(InvalidArgument):
        Block(BlockShape(2, 1, 1), np.zeros(3), (0, 0, 0))
