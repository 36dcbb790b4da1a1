"""Feature-map data model, ``.fmap`` I/O and cubical block partitioning.

Samples are kept in a ``(channels, height, width)`` numpy array so that a
C-order flatten gives raster order: w fastest, then h, then c.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import BadMagic, BadVersion, CorruptStream, InvalidArgument, InvalidSample, Truncated


class SampleFormat(enum.Enum):
    INT8 = (0, 8, "int8")
    INT16 = (1, 16, "int16")
    FP16 = (2, 16, "float16")

    def __init__(self, code: int, bit_width: int, dtype: str):
        self.code = code
        self.bit_width = bit_width
        self.dtype = np.dtype(dtype)

    @property
    def is_float(self) -> bool:
        return self is SampleFormat.FP16

    @property
    def peak(self) -> float:
        """Largest representable magnitude."""
        if self.is_float:
            return float(np.finfo(np.float16).max)
        return float(np.iinfo(self.dtype).max)

    @classmethod
    def from_code(cls, code: int) -> "SampleFormat":
        for fmt in cls:
            if fmt.code == code:
                return fmt
        raise InvalidArgument(f"unknown sample format code {code}")

    @classmethod
    def from_name(cls, name: str) -> "SampleFormat":
        try:
            return cls[name.upper()]
        except KeyError:
            raise InvalidArgument(f"unknown sample format {name!r}") from None


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True)
class FeatureMap:
    """Immutable W x H x C tensor.

    ``data`` has shape ``(channels, height, width)`` and the dtype of
    ``format``.
    """

    format: SampleFormat
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = np.array(self.data, dtype=self.format.dtype, copy=True)
        if data.ndim != 3 or min(data.shape) < 1:
            raise InvalidArgument(f"feature map needs three positive dims, got {data.shape}")
        if self.format.is_float and not np.isfinite(data).all():
            raise InvalidSample("FP16 feature maps must not contain NaN or infinity")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @classmethod
    def from_raster(cls, fmt: SampleFormat, width: int, height: int, channels: int, samples) -> "FeatureMap":
        flat = np.asarray(samples)
        if flat.size != width * height * channels:
            raise InvalidArgument(
                f"expected {width * height * channels} samples, got {flat.size}"
            )
        return cls(fmt, flat.reshape(channels, height, width))

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.width, self.height, self.channels)

    @property
    def size(self) -> int:
        return self.data.size

    def raster(self) -> np.ndarray:
        return self.data.reshape(-1)

    def _bits(self) -> np.ndarray:
        if self.format.is_float:
            return self.data.view(np.uint16)
        return self.data

    def __eq__(self, other):
        if not isinstance(other, FeatureMap):
            return NotImplemented
        return (
            self.format is other.format
            and self.data.shape == other.data.shape
            and np.array_equal(self._bits(), other._bits())
        )

    def __hash__(self):
        return hash((self.format, self.data.shape, self._bits().tobytes()))


@dataclass(frozen=True)
class BlockShape:
    w: int
    h: int
    c: int

    def __post_init__(self):
        if min(self.w, self.h, self.c) < 1:
            raise InvalidArgument(f"block dims must be positive: {self}")
        if not _is_pow2(self.size):
            raise InvalidArgument(f"block size {self.size} is not a power of two")

    @property
    def size(self) -> int:
        return self.w * self.h * self.c

    @classmethod
    def parse(cls, text: str) -> "BlockShape":
        try:
            w, h, c = (int(t) for t in text.lower().split("x"))
        except ValueError:
            raise InvalidArgument(f"block shape must look like WxHxC, got {text!r}") from None
        return cls(w, h, c)

    def __str__(self):
        return f"({self.w}, {self.h}, {self.c})"


@dataclass(frozen=True)
class Block:
    shape: BlockShape
    values: np.ndarray = field(repr=False)
    origin: tuple[int, int, int]

    def __post_init__(self):
        if len(self.values) != self.shape.size:
            raise InvalidArgument("block value count does not match its shape")


def derive_cubical_shape(block_size: int) -> BlockShape:
    """Most cube-like (w, h, c) factorisation of a power-of-two block size.

    Starting from ``(1, 1, n)``, width and height are doubled while the
    channel depth is quartered until depth is at most twice the width.
    """
    if not isinstance(block_size, (int, np.integer)) or block_size < 2 or not _is_pow2(block_size):
        raise InvalidArgument(f"block size must be a power of two >= 2, got {block_size!r}")
    w = h = 1
    c = int(block_size)
    while c > 2 * w and c >= 4:
        w, h, c = 2 * w, 2 * h, c // 4
    return BlockShape(w, h, c)


def grid_dims(dims: tuple[int, int, int], shape: BlockShape) -> tuple[int, int, int]:
    """Blocks per axis after padding, ordered (w, h, c)."""
    w, h, c = dims
    return (-(-w // shape.w), -(-h // shape.h), -(-c // shape.c))


def block_origins(dims: tuple[int, int, int], shape: BlockShape) -> list[tuple[int, int, int]]:
    nw, nh, nc = grid_dims(dims, shape)
    return [
        (bw * shape.w, bh * shape.h, bc * shape.c)
        for bc in range(nc)
        for bh in range(nh)
        for bw in range(nw)
    ]


def partition_array(data: np.ndarray, shape: BlockShape) -> np.ndarray:
    """Split a (C, H, W) array into a ``(n_blocks, block_size)`` array.

    Out-of-range positions replicate the nearest edge sample.
    """
    c, h, w = data.shape
    nw, nh, nc = grid_dims((w, h, c), shape)
    pad = ((0, nc * shape.c - c), (0, nh * shape.h - h), (0, nw * shape.w - w))
    padded = np.pad(data, pad, mode="edge")
    tiles = padded.reshape(nc, shape.c, nh, shape.h, nw, shape.w)
    return tiles.transpose(0, 2, 4, 1, 3, 5).reshape(nc * nh * nw, shape.size)


def reassemble_array(blocks: np.ndarray, dims: tuple[int, int, int], shape: BlockShape) -> np.ndarray:
    """Inverse of :func:`partition_array`; padding samples are dropped."""
    w, h, c = dims
    nw, nh, nc = grid_dims(dims, shape)
    if blocks.shape != (nw * nh * nc, shape.size):
        raise CorruptStream(
            f"expected {nw * nh * nc} blocks of {shape.size} samples, got {blocks.shape}"
        )
    tiles = blocks.reshape(nc, nh, nw, shape.c, shape.h, shape.w).transpose(0, 3, 1, 4, 2, 5)
    full = tiles.reshape(nc * shape.c, nh * shape.h, nw * shape.w)
    return np.ascontiguousarray(full[:c, :h, :w])


def partition(fmap: FeatureMap, shape: BlockShape) -> list[Block]:
    arr = partition_array(fmap.data, shape)
    origins = block_origins(fmap.dims, shape)
    return [Block(shape, row, origin) for row, origin in zip(arr, origins)]


def reassemble(blocks, dims: tuple[int, int, int], fmt: SampleFormat) -> FeatureMap:
    blocks = list(blocks)
    if not blocks:
        raise CorruptStream("no blocks to reassemble")
    shape = blocks[0].shape
    expected = block_origins(dims, shape)
    if len(blocks) != len(expected):
        raise CorruptStream(f"expected {len(expected)} blocks, got {len(blocks)}")
    for blk, origin in zip(blocks, expected):
        if blk.shape != shape:
            raise CorruptStream("blocks do not share one shape")
        if tuple(blk.origin) != origin:
            raise CorruptStream(f"block at {blk.origin} found where {origin} was expected")
    arr = np.stack([np.asarray(b.values) for b in blocks])
    return FeatureMap(fmt, reassemble_array(arr, dims, shape))


# .fmap container: magic, version, format, reserved, then W, H, C as u32.
_FMAP_HEADER = struct.Struct("<4sBBBIII")
FMAP_MAGIC = b"FMAP"
FMAP_VERSION = 1


def store_fmap(fmap: FeatureMap) -> bytes:
    header = _FMAP_HEADER.pack(
        FMAP_MAGIC, FMAP_VERSION, fmap.format.code, 0, fmap.width, fmap.height, fmap.channels
    )
    payload = fmap.data.astype(fmap.format.dtype.newbyteorder("<"), copy=False).tobytes()
    return header + payload


def load_fmap(blob: bytes) -> FeatureMap:
    blob = bytes(blob)
    if blob[:4] != FMAP_MAGIC:
        raise BadMagic(f"bad .fmap magic {blob[:4]!r}")
    if len(blob) < _FMAP_HEADER.size:
        raise Truncated("truncated .fmap header")
    _, version, code, reserved, w, h, c = _FMAP_HEADER.unpack_from(blob)
    if version != FMAP_VERSION:
        raise BadVersion(f"unsupported .fmap version {version}")
    if reserved != 0:
        raise CorruptStream("reserved .fmap byte is not zero")
    try:
        fmt = SampleFormat.from_code(code)
    except InvalidArgument as exc:
        raise CorruptStream(str(exc)) from None
    if min(w, h, c) < 1:
        raise CorruptStream("zero-sized .fmap dimensions")
    nbytes = w * h * c * fmt.bit_width // 8
    payload = blob[_FMAP_HEADER.size:]
    if len(payload) < nbytes:
        raise Truncated(f"payload holds {len(payload)} bytes, header requires {nbytes}")
    if len(payload) > nbytes:
        raise CorruptStream(f"{len(payload) - nbytes} trailing bytes after .fmap payload")
    data = np.frombuffer(payload, dtype=fmt.dtype.newbyteorder("<")).astype(fmt.dtype)
    return FeatureMap(fmt, data.reshape(c, h, w))


def read_fmap(path) -> FeatureMap:
    with open(path, "rb") as fh:
        return load_fmap(fh.read())


def write_fmap(path, fmap: FeatureMap) -> None:
    with open(path, "wb") as fh:
        fh.write(store_fmap(fmap))
