"""``.asc`` stream format and compression-rate accounting.

Layout (little-endian)::

    magic "ASCF" | version u8 | flags u8 | format u8 | blockW u8 | blockH u8
    | blockC u16 | W u32 | H u32 | C u32
    [permutation: C x u16]                      (flag bit 2)
    payload bit sequence, LSB-first, zero-padded to a byte at the end:
        [mask: one bit per sample, 1 = nonzero]  (flag bit 1, VBR)
        per block: endpoint1, [endpoint2], block_size x 3-bit index

Two-endpoint blocks signal the scale by endpoint order: ``(min, max)`` for
revised linear, ``(max, min)`` for log-linear.  One-endpoint blocks store
only the maximum; its sign bit, never set by nonnegative data, carries the
scale flag.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .codec import CodecConfig, EncodedTensor, EndpointMode
from .errors import BadMagic, BadVersion, CorruptStream, InvalidArgument, Truncated, TrailingData, Unsupported
from .tensor import BlockShape, FeatureMap, SampleFormat, grid_dims

MAGIC = b"ASCF"
VERSION = 1
HEADER = struct.Struct("<4sBBBBBHIII")

FLAG_ONE_ENDPOINT = 0x01
FLAG_VBR = 0x02
FLAG_PERMUTATION = 0x04
_KNOWN_FLAGS = FLAG_ONE_ENDPOINT | FLAG_VBR | FLAG_PERMUTATION

INDEX_BITS = 3


def _bits_of(patterns: np.ndarray, width: int) -> np.ndarray:
    return ((patterns[:, None] >> np.arange(width)) & 1).astype(np.uint8)


def _value_of(bits: np.ndarray) -> np.ndarray:
    return bits.astype(np.int64) @ (1 << np.arange(bits.shape[1], dtype=np.int64))


def _patterns(values: np.ndarray, fmt: SampleFormat) -> np.ndarray:
    if fmt.is_float:
        return values.astype(np.float16).view(np.uint16).astype(np.int64)
    return values.astype(np.int64) & ((1 << fmt.bit_width) - 1)


def _from_patterns(patterns: np.ndarray, fmt: SampleFormat) -> np.ndarray:
    if fmt.is_float:
        vals = patterns.astype(np.uint16).view(np.float16)
        if not np.isfinite(vals).all():
            raise CorruptStream("endpoint is NaN or infinite")
        return vals.astype(np.float64)
    w = fmt.bit_width
    return np.where(patterns >= 1 << (w - 1), patterns - (1 << w), patterns)


def block_count(config: CodecConfig, dims, nonzeros: int | None = None) -> int:
    if config.vbr:
        return -(-nonzeros // config.block_size)
    nw, nh, nc = grid_dims(dims, config.shape)
    return nw * nh * nc


def payload_bits(t: EncodedTensor) -> int:
    """Closed-form payload length: blocks x record bits (+ mask for VBR)."""
    bits = t.n_blocks * t.config.block_bits
    if t.config.vbr:
        bits += int(np.prod(t.dims))
    return bits


def _header(t: EncodedTensor) -> bytes:
    cfg = t.config
    flags = 0
    if cfg.mode is EndpointMode.ONE:
        flags |= FLAG_ONE_ENDPOINT
    if cfg.vbr:
        flags |= FLAG_VBR
    if t.permutation is not None:
        flags |= FLAG_PERMUTATION
    s = cfg.shape
    if s.w > 0xFF or s.h > 0xFF or s.c > 0xFFFF:
        raise InvalidArgument(f"block shape {s} does not fit the stream header")
    w, h, c = t.dims
    out = HEADER.pack(MAGIC, VERSION, flags, cfg.format.code, s.w, s.h, s.c, w, h, c)
    if t.permutation is not None:
        if c > 0xFFFF + 1:
            raise InvalidArgument("too many channels to store a permutation")
        out += struct.pack(f"<{c}H", *t.permutation)
    return out


def _records(t: EncodedTensor) -> np.ndarray:
    cfg = t.config
    fmt = cfg.format
    width = fmt.bit_width
    lo = _patterns(t.mins, fmt)
    hi = _patterns(t.maxs, fmt)
    is_log = t.scales.astype(bool)
    parts = []
    if cfg.mode is EndpointMode.TWO:
        parts.append(_bits_of(np.where(is_log, hi, lo), width))
        parts.append(_bits_of(np.where(is_log, lo, hi), width))
    else:
        flagged = hi | (is_log.astype(np.int64) << (width - 1))
        parts.append(_bits_of(flagged, width))
    parts.append(_bits_of(t.indices.reshape(-1).astype(np.int64), INDEX_BITS).reshape(t.n_blocks, INDEX_BITS * cfg.block_size))
    return np.concatenate(parts, axis=1).reshape(-1)


def serialize(t: EncodedTensor) -> bytes:
    bits = _records(t)
    if t.config.vbr:
        bits = np.concatenate([t.mask.astype(np.uint8), bits])
    return _header(t) + np.packbits(bits, bitorder="little").tobytes()


@dataclass(frozen=True)
class StreamHeader:
    config: CodecConfig
    dims: tuple[int, int, int]
    has_permutation: bool

    @property
    def size(self) -> int:
        return HEADER.size + (2 * self.dims[2] if self.has_permutation else 0)


def read_header(blob: bytes) -> StreamHeader:
    if blob[:4] != MAGIC:
        raise BadMagic(f"bad stream magic {bytes(blob[:4])!r}")
    if len(blob) < HEADER.size:
        raise Truncated("stream header is truncated")
    _, version, flags, code, bw, bh, bc, w, h, c = HEADER.unpack_from(blob)
    if version != VERSION:
        raise BadVersion(f"unsupported stream version {version}")
    if flags & ~_KNOWN_FLAGS:
        raise CorruptStream(f"unknown flag bits 0x{flags:02x}")
    try:
        fmt = SampleFormat.from_code(code)
        shape = BlockShape(bw, bh, bc)
    except InvalidArgument as exc:
        raise CorruptStream(str(exc)) from None
    if min(w, h, c) < 1:
        raise CorruptStream("stream declares an empty tensor")
    mode = EndpointMode.ONE if flags & FLAG_ONE_ENDPOINT else EndpointMode.TWO
    config = CodecConfig(shape, mode, fmt, bool(flags & FLAG_VBR))
    return StreamHeader(config, (w, h, c), bool(flags & FLAG_PERMUTATION))


def _parse(blob: bytes):
    blob = bytes(blob)
    head = read_header(blob)
    cfg = head.config
    w, h, c = head.dims
    pos = HEADER.size
    permutation = None
    if head.has_permutation:
        if len(blob) < head.size:
            raise Truncated("stream permutation is truncated")
        permutation = struct.unpack_from(f"<{c}H", blob, pos)
        if sorted(permutation) != list(range(c)):
            raise CorruptStream("stored permutation is not a bijection")
        pos = head.size
    payload = np.frombuffer(blob, dtype=np.uint8, offset=pos)
    bits = np.unpackbits(payload, bitorder="little")

    cursor = 0
    mask = None
    nonzeros = None
    if cfg.vbr:
        n = w * h * c
        if len(bits) < n:
            raise Truncated("mask section is truncated")
        mask = bits[:n].astype(bool)
        nonzeros = int(mask.sum())
        cursor = n
    n_blocks = block_count(cfg, head.dims, nonzeros)
    total = cursor + n_blocks * cfg.block_bits
    if len(bits) < total:
        raise Truncated(f"payload holds {len(bits)} bits, stream needs {total}")
    if len(payload) > -(-total // 8):
        raise TrailingData(f"{len(payload) - -(-total // 8)} bytes after the last block")
    if bits[total:].any():
        raise TrailingData("nonzero padding bits after the last block")
    return head, permutation, mask, bits[cursor:total].reshape(n_blocks, cfg.block_bits), total


def deserialize(blob: bytes) -> EncodedTensor:
    head, permutation, mask, rec, _ = _parse(blob)
    cfg = head.config
    fmt = cfg.format
    width = fmt.bit_width
    n_blocks = rec.shape[0]
    e1 = _value_of(rec[:, :width])
    if cfg.mode is EndpointMode.TWO:
        e2 = _value_of(rec[:, width:2 * width])
        v1, v2 = _from_patterns(e1, fmt), _from_patterns(e2, fmt)
        is_log = v1 > v2
        mins = np.where(is_log, v2, v1)
        maxs = np.where(is_log, v1, v2)
        start = 2 * width
    else:
        top = 1 << (width - 1)
        is_log = e1 >= top
        maxs = _from_patterns(e1 & (top - 1), fmt)
        mins = np.zeros_like(maxs)
        start = width
    idx = _value_of(rec[:, start:].reshape(-1, INDEX_BITS)).reshape(n_blocks, cfg.block_size)
    return EncodedTensor(cfg, head.dims, is_log.astype(np.uint8), mins, maxs, idx, permutation, mask)


def nominal_rate(config: CodecConfig) -> Fraction:
    """Uncompressed over compressed bits of one block."""
    if config.vbr:
        raise Unsupported("the nominal rate is defined for constant-bitrate streams only")
    return Fraction(config.block_size * config.format.bit_width, config.block_bits)


@dataclass(frozen=True)
class RateReport:
    nominal: Fraction | None
    measured: Fraction
    sparsity: float
    payload_bits: int
    header_bits: int

    def as_dict(self) -> dict:
        return {
            "nominal": None if self.nominal is None else float(self.nominal),
            "nominal_exact": None if self.nominal is None else str(self.nominal),
            "measured": float(self.measured),
            "measured_exact": str(self.measured),
            "sparsity": self.sparsity,
            "payload_bits": self.payload_bits,
            "header_bits": self.header_bits,
        }


def measured_rate(blob: bytes, source: FeatureMap) -> RateReport:
    head, _, _, _, total = _parse(blob)
    if head.dims != source.dims:
        raise InvalidArgument(f"stream dims {head.dims} do not match map dims {source.dims}")
    uncompressed = source.size * source.format.bit_width
    cfg = head.config
    return RateReport(
        nominal=None if cfg.vbr else nominal_rate(cfg),
        measured=Fraction(uncompressed, total),
        sparsity=float(np.count_nonzero(source.raster() == 0)) / source.size,
        payload_bits=total,
        header_bits=8 * head.size,
    )
