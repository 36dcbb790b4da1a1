"""Constant-bitrate block codec.

Every block stores its endpoints plus one 3-bit index per sample.  Indices
are computed under both the revised linear and the log-linear scale and the
scale with the strictly smaller L1 loss is kept; ties go to revised linear.

Whole-tensor encoding runs through the kernel backend; the per-block
functions here are a straightforward scalar path built on :mod:`scales`.
"""

from __future__ import annotations

import enum
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .errors import CorruptStream, InvalidArgument, ModeViolation
from .scales import ScaleKind, assign_index, build_table
from .tensor import Block, BlockShape, FeatureMap, SampleFormat, partition_array, reassemble_array


class EndpointMode(enum.IntEnum):
    ONE = 1
    TWO = 2


SCALE_POLICIES = {
    "adaptive": backend.ADAPTIVE,
    "revised": backend.REVISED_ONLY,
    "log": backend.LOG_ONLY,
}


@dataclass(frozen=True)
class CodecConfig:
    shape: BlockShape
    mode: EndpointMode = EndpointMode.TWO
    format: SampleFormat = SampleFormat.INT8
    vbr: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mode", EndpointMode(self.mode))

    @property
    def block_size(self) -> int:
        return self.shape.size

    @property
    def block_shape(self) -> BlockShape:
        """Geometry of the blocks actually coded (1-D for VBR)."""
        if self.vbr:
            return BlockShape(self.block_size, 1, 1)
        return self.shape

    @property
    def block_bits(self) -> int:
        return int(self.mode) * self.format.bit_width + 3 * self.block_size


@dataclass(frozen=True)
class EncodedBlock:
    scale: ScaleKind
    endpoint_min: object
    endpoint_max: object
    indices: tuple


def _endpoint_patterns(values, fmt: SampleFormat) -> np.ndarray:
    """Raw format-width bit patterns of endpoint values."""
    if fmt.is_float:
        return np.asarray(values, dtype=np.float64).astype(np.float16).view(np.uint16).astype(np.int64)
    return np.asarray(values, dtype=np.int64) & ((1 << fmt.bit_width) - 1)


@dataclass(eq=False)
class EncodedTensor:
    """A whole encoded feature map.

    Per-block data is held column-wise: ``scales[i]``, ``mins[i]``,
    ``maxs[i]`` and ``indices[i]`` describe block ``i``.  For VBR streams
    ``mask`` is the zero/nonzero bitmap and the blocks cover the compacted
    nonzero samples.
    """

    config: CodecConfig
    dims: tuple[int, int, int]
    scales: np.ndarray
    mins: np.ndarray
    maxs: np.ndarray
    indices: np.ndarray
    permutation: tuple | None = None
    mask: np.ndarray | None = field(default=None)

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        dtype = np.float64 if self.config.format.is_float else np.int64
        self.scales = np.asarray(self.scales, dtype=np.uint8)
        self.mins = np.asarray(self.mins, dtype=dtype)
        self.maxs = np.asarray(self.maxs, dtype=dtype)
        self.indices = np.asarray(self.indices, dtype=np.uint8).reshape(-1, self.config.block_size)
        if self.permutation is not None:
            self.permutation = tuple(int(p) for p in self.permutation)
        if self.mask is not None:
            self.mask = np.asarray(self.mask, dtype=bool).reshape(-1)

    @property
    def n_blocks(self) -> int:
        return len(self.scales)

    @property
    def blocks(self) -> list[EncodedBlock]:
        cast = float if self.config.format.is_float else int
        return [
            EncodedBlock(ScaleKind(int(s)), cast(lo), cast(hi), tuple(int(i) for i in idx))
            for s, lo, hi, idx in zip(self.scales, self.mins, self.maxs, self.indices)
        ]

    def scale_usage(self) -> dict[str, int]:
        n_log = int(np.count_nonzero(self.scales))
        return {"revised_linear": self.n_blocks - n_log, "log_linear": n_log}

    def __eq__(self, other):
        if not isinstance(other, EncodedTensor):
            return NotImplemented
        fmt = self.config.format
        same_mask = (self.mask is None and other.mask is None) or (
            self.mask is not None and other.mask is not None and np.array_equal(self.mask, other.mask)
        )
        return (
            self.config == other.config
            and self.dims == other.dims
            and self.permutation == other.permutation
            and same_mask
            and np.array_equal(self.scales, other.scales)
            and np.array_equal(_endpoint_patterns(self.mins, fmt), _endpoint_patterns(other.mins, fmt))
            and np.array_equal(_endpoint_patterns(self.maxs, fmt), _endpoint_patterns(other.maxs, fmt))
            and np.array_equal(self.indices, other.indices)
        )


def _values(block) -> np.ndarray:
    return np.asarray(block.values if isinstance(block, Block) else block)


def find_endpoints(block, mode: EndpointMode):
    """Block (min, max); the minimum is pinned to zero in one-endpoint mode."""
    values = _values(block)
    if np.issubdtype(values.dtype, np.floating):
        lo, hi = float(values.min()), float(values.max()) + 0.0
    else:
        lo, hi = int(values.min()), int(values.max())
    if EndpointMode(mode) is EndpointMode.ONE:
        if lo < 0:
            raise ModeViolation(f"one-endpoint mode needs nonnegative samples, found {lo}")
        return (type(hi)(0), hi)
    return (lo, hi)


def _reconstruction_points(table) -> list:
    if isinstance(table.m, float):
        return [float(np.float16(p)) for p in table.points]
    return list(table.points)


def block_l1(block, table):
    """Total absolute error of coding ``block`` with ``table``."""
    points = _reconstruction_points(table)
    total = 0
    for x in _values(block).tolist():
        total += abs(x - points[assign_index(x, table)])
    return total


def encode_block(block, config: CodecConfig, scale: str = "adaptive") -> EncodedBlock:
    values = _values(block)
    if len(values) != config.block_size:
        raise InvalidArgument(f"block has {len(values)} samples, config expects {config.block_size}")
    m, M = find_endpoints(values, config.mode)
    kinds = {
        "adaptive": (ScaleKind.REVISED_LINEAR, ScaleKind.LOG_LINEAR),
        "revised": (ScaleKind.REVISED_LINEAR,),
        "log": (ScaleKind.LOG_LINEAR,),
    }[scale]
    if M == m:
        kinds = (ScaleKind.REVISED_LINEAR,)
    best = None
    for kind in kinds:
        table = build_table(kind, m, M)
        loss = block_l1(values, table)
        if best is None or loss < best[0]:
            best = (loss, kind, table)
    _, kind, table = best
    indices = tuple(assign_index(x, table) for x in values.tolist())
    return EncodedBlock(kind, m, M, indices)


def decode_block(enc: EncodedBlock, config: CodecConfig, origin=(0, 0, 0)) -> Block:
    if enc.endpoint_min > enc.endpoint_max:
        raise CorruptStream(f"endpoint min {enc.endpoint_min} above max {enc.endpoint_max}")
    points = _reconstruction_points(build_table(enc.scale, enc.endpoint_min, enc.endpoint_max))
    values = np.array([points[i] for i in enc.indices], dtype=config.format.dtype)
    return Block(config.block_shape, values, tuple(origin))


def thread_count() -> int:
    cap = os.environ.get("ASC_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise InvalidArgument(f"ASC_THREADS must be an integer, got {cap!r}") from None
    return n


_CHUNK = 1 << 15


def encode_array(values: np.ndarray, config: CodecConfig, scale: str = "adaptive"):
    """Encode a ``(n_blocks, block_size)`` array; returns column arrays."""
    if scale not in SCALE_POLICIES:
        raise InvalidArgument(f"unknown scale policy {scale!r}")
    is_float = config.format.is_float
    values = np.ascontiguousarray(values, dtype=np.float64 if is_float else np.int64)
    one = config.mode is EndpointMode.ONE
    if one and values.size and values.min() < 0:
        raise ModeViolation("one-endpoint mode needs nonnegative samples")
    policy = SCALE_POLICIES[scale]
    kern = backend.kernels
    n = values.shape[0]
    threads = thread_count()
    if threads == 1 or n <= _CHUNK:
        return kern.encode_blocks(values, one, policy, is_float)
    chunks = [values[i:i + _CHUNK] for i in range(0, n, _CHUNK)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda c: kern.encode_blocks(c, one, policy, is_float), chunks))
    return tuple(np.concatenate(col) for col in zip(*parts))


def decode_array(t: EncodedTensor) -> np.ndarray:
    if np.any(t.mins > t.maxs):
        raise CorruptStream("a block has its minimum endpoint above its maximum")
    return backend.kernels.decode_blocks(
        t.scales, t.mins, t.maxs, t.indices, t.config.format.is_float
    )


def encode(fmap: FeatureMap, config: CodecConfig, scale: str = "adaptive", permutation=None) -> EncodedTensor:
    """Encode a feature map; dispatches to the VBR path when ``config.vbr``."""
    if fmap.format is not config.format:
        raise InvalidArgument(f"map is {fmap.format.name}, config expects {config.format.name}")
    if permutation is not None:
        from .reorder import ChannelPermutation, apply_permutation

        permutation = ChannelPermutation(permutation)
        fmap = apply_permutation(fmap, permutation)
        permutation = permutation.order
    if config.vbr:
        from .vbr import encode_vbr

        t = encode_vbr(fmap, config, scale)
        t.permutation = permutation
        return t
    blocks = partition_array(fmap.data, config.shape)
    scales, mins, maxs, indices = encode_array(blocks, config, scale)
    return EncodedTensor(config, fmap.dims, scales, mins, maxs, indices, permutation)


def decode(t: EncodedTensor) -> FeatureMap:
    if t.config.vbr:
        from .vbr import decode_vbr

        fmap = decode_vbr(t)
    else:
        values = decode_array(t)
        data = reassemble_array(values, t.dims, t.config.shape)
        fmap = FeatureMap(t.config.format, data.astype(t.config.format.dtype))
    if t.permutation is not None:
        from .reorder import ChannelPermutation, apply_permutation, invert

        fmap = apply_permutation(fmap, invert(ChannelPermutation(t.permutation)))
    return fmap

