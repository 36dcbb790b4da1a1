import struct
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from ascfmap import bitstream
from ascfmap.bitstream import HEADER, deserialize, measured_rate, nominal_rate, payload_bits, read_header, serialize
from ascfmap.codec import CodecConfig, EncodedTensor, EndpointMode, decode, encode
from ascfmap.errors import BadMagic, BadVersion, CorruptStream, InvalidArgument, Truncated, TrailingData, Unsupported
from ascfmap.scales import ScaleKind
from ascfmap.tensor import BlockShape, FeatureMap, SampleFormat, derive_cubical_shape

from conftest import random_map

I8, I16, F16 = SampleFormat.INT8, SampleFormat.INT16, SampleFormat.FP16
ONE, TWO = EndpointMode.ONE, EndpointMode.TWO


def one_block(values, mode=TWO, fmt=I8):
    arr = np.asarray(values, fmt.dtype).reshape(len(values), 1, 1)
    fmap = FeatureMap(fmt, arr)
    return fmap, encode(fmap, CodecConfig(BlockShape(1, 1, len(values)), mode, fmt))


def test_header_size():
    assert HEADER.size == 23


def test_log_block_emits_max_first():
    _, t = one_block([0, 1, 2, 3, 0, 1, 2, 96])
    payload = serialize(t)[HEADER.size:]
    assert payload[0] == 96 and payload[1] == 0
    assert len(payload) == 2 + 3  # 8 x 3-bit indices
    idx = np.unpackbits(np.frombuffer(payload[2:], np.uint8), bitorder="little")
    got = (idx.reshape(8, 3) * [1, 2, 4]).sum(axis=1).tolist()
    assert got == [0, 0, 1, 1, 0, 0, 1, 7]


def test_revised_block_emits_min_first():
    _, t = one_block([-5, 40, 40, -5, 0, 10, 20, 30])
    assert t.scales[0] == ScaleKind.REVISED_LINEAR
    payload = serialize(t)[HEADER.size:]
    assert struct.unpack("<bb", payload[:2]) == (-5, 40)


def test_decoder_reads_order():
    _, t = one_block([0, 1, 2, 3, 0, 1, 2, 96])
    back = deserialize(serialize(t))
    assert back.scales[0] == ScaleKind.LOG_LINEAR
    assert (back.mins[0], back.maxs[0]) == (0, 96)
    _, t = one_block([7] * 8)
    blob = serialize(t)
    assert blob[HEADER.size:HEADER.size + 2] == bytes([7, 7])
    back = deserialize(blob)
    assert back.scales[0] == ScaleKind.REVISED_LINEAR and back.mins[0] == back.maxs[0] == 7


def test_one_endpoint_sign_flag():
    fmap, t = one_block([0, 1, 2, 3, 0, 1, 2, 96], ONE)
    blob = serialize(t)
    assert blob[HEADER.size] == 96 | 0x80
    back = deserialize(blob)
    assert back == t and decode(back) == decode(t)
    _, t = one_block([0, 14, 27, 41, 55, 69, 82, 96], ONE)
    assert serialize(t)[HEADER.size] == 96


def test_fp16_endpoints_bit_exact(rng):
    fmap = random_map(rng, F16, (4, 4, 4))
    t = encode(fmap, CodecConfig(derive_cubical_shape(8), TWO, F16))
    back = deserialize(serialize(t))
    assert back == t
    assert decode(back) == decode(t)


def test_truncated():
    _, t = one_block([0, 1, 2, 3, 0, 1, 2, 96])
    blob = serialize(t)
    for cut in (len(blob) - 1, HEADER.size + 1, HEADER.size - 3, 4):
        with pytest.raises(Truncated):
            deserialize(blob[:cut])


def test_bad_magic_and_version():
    _, t = one_block([1] * 4)
    blob = serialize(t)
    with pytest.raises(BadMagic):
        deserialize(b"XSCF" + blob[4:])
    with pytest.raises(BadMagic):
        deserialize(b"")
    with pytest.raises(BadVersion):
        deserialize(blob[:4] + bytes([2]) + blob[5:])
    assert issubclass(BadMagic, CorruptStream)


def test_trailing_data():
    _, t = one_block([0, 1, 2, 3, 0, 1, 2, 96])
    blob = serialize(t)
    with pytest.raises(TrailingData):
        deserialize(blob + b"\x00")
    # 4 samples: 16 + 12 bits, so the last byte has 4 pad bits
    _, t = one_block([1, 2, 3, 4])
    blob = bytearray(serialize(t))
    blob[-1] |= 0x80
    with pytest.raises(TrailingData):
        deserialize(bytes(blob))


def test_header_corruption():
    _, t = one_block([1] * 4)
    blob = bytearray(serialize(t))
    bad_flags = bytes(blob[:5]) + bytes([0x80]) + bytes(blob[6:])
    with pytest.raises(CorruptStream):
        deserialize(bad_flags)
    bad_format = bytes(blob[:6]) + bytes([9]) + bytes(blob[7:])
    with pytest.raises(CorruptStream):
        deserialize(bad_format)
    bad_shape = bytes(blob[:7]) + bytes([3]) + bytes(blob[8:])
    with pytest.raises(CorruptStream):
        deserialize(bad_shape)


def test_permutation_stored():
    fmap = FeatureMap(I8, np.arange(16, dtype=np.int8).reshape(4, 2, 2))
    t = encode(fmap, CodecConfig(BlockShape(2, 2, 2)), permutation=[2, 0, 3, 1])
    blob = serialize(t)
    head = read_header(blob)
    assert head.has_permutation and head.size == HEADER.size + 8
    back = deserialize(blob)
    assert back.permutation == (2, 0, 3, 1)
    assert decode(back).dims == fmap.dims
    broken = blob[:HEADER.size] + struct.pack("<4H", 0, 0, 1, 2) + blob[HEADER.size + 8:]
    with pytest.raises(CorruptStream):
        deserialize(broken)


def test_nan_endpoint_rejected():
    fmap, t = one_block([1.0, 2.0], fmt=F16)
    blob = bytearray(serialize(t))
    blob[HEADER.size:HEADER.size + 2] = np.array([np.nan], np.float16).tobytes()
    with pytest.raises(CorruptStream):
        deserialize(bytes(blob))


@pytest.mark.parametrize("mode, n, fmt, rate", [
    (TWO, 16, I8, Fraction(2)),
    (ONE, 8, I8, Fraction(2)),
    (ONE, 8, I16, Fraction(16, 5)),
    (ONE, 16, I16, Fraction(4)),
    (TWO, 16, I16, Fraction(16, 5)),
    (TWO, 32, I16, Fraction(4)),
])
def test_nominal_rate(mode, n, fmt, rate):
    assert nominal_rate(CodecConfig(derive_cubical_shape(n), mode, fmt)) == rate


def test_nominal_rate_vbr_unsupported():
    with pytest.raises(Unsupported):
        nominal_rate(CodecConfig(BlockShape(4, 1, 1), vbr=True))


@pytest.mark.parametrize("fmt", list(SampleFormat))
@pytest.mark.parametrize("mode", [ONE, TWO])
def test_measured_equals_nominal_without_padding(rng, fmt, mode):
    fmap = random_map(rng, fmt, (8, 4, 8), nonneg=mode is ONE)
    cfg = CodecConfig(derive_cubical_shape(16), mode, fmt)
    report = measured_rate(serialize(encode(fmap, cfg)), fmap)
    assert report.measured == report.nominal == nominal_rate(cfg)
    assert report.header_bits == 8 * HEADER.size


def test_measured_rate_dims_mismatch(rng):
    fmap = random_map(rng, I8, (4, 4, 4))
    blob = serialize(encode(fmap, CodecConfig(derive_cubical_shape(16))))
    with pytest.raises(InvalidArgument):
        measured_rate(blob, random_map(rng, I8, (4, 4, 8)))


def test_oversized_block_shape_rejected():
    fmap = FeatureMap(I8, np.zeros((1, 1, 512), np.int8))
    t = encode(fmap, CodecConfig(BlockShape(512, 1, 1)))
    with pytest.raises(InvalidArgument):
        serialize(t)


@st.composite
def encoded_streams(draw):
    fmt = draw(st.sampled_from(list(SampleFormat)))
    mode = draw(st.sampled_from([ONE, TWO]))
    vbr = draw(st.booleans())
    dims = tuple(draw(st.integers(1, 6)) for _ in range(3))
    shape = BlockShape(*(2 ** draw(st.integers(0, 2)) for _ in range(3)))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    fmap = random_map(rng, fmt, dims, nonneg=mode is ONE, zero_frac=draw(st.sampled_from([0, 0.5, 1.0])))
    perm = draw(st.none() | st.permutations(list(range(dims[2]))))
    scale = draw(st.sampled_from(["adaptive", "revised", "log"]))
    return fmap, encode(fmap, CodecConfig(shape, mode, fmt, vbr), scale=scale, permutation=perm)


@settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(encoded_streams())
def test_round_trip(case):
    fmap, t = case
    blob = serialize(t)
    back = deserialize(blob)
    assert back == t
    assert serialize(back) == blob
    assert len(blob) == read_header(blob).size + -(-payload_bits(t) // 8)
    assert decode(back) == decode(t)
