"""Variable-bitrate coding: a zero bitmap plus CBR over the nonzeros.

Nonzero samples are compacted in raster order and grouped into 1-D blocks
of the configured block size; the last partial block repeats its final
value so the padding never widens the block range.
"""

import numpy as np

from .codec import CodecConfig, EncodedTensor, decode_array, encode_array
from .errors import CorruptStream, InvalidArgument
from .tensor import FeatureMap


def zero_mask(fmap: FeatureMap) -> np.ndarray:
    """One flag per sample in raster order, True where the sample is nonzero.

    Both FP16 zeros (+0 and -0) count as zero.
    """
    return fmap.raster() != 0


def compact_blocks(nonzeros: np.ndarray, block_size: int) -> np.ndarray:
    n = len(nonzeros)
    n_blocks = -(-n // block_size)
    if n_blocks == 0:
        return np.zeros((0, block_size), dtype=nonzeros.dtype)
    pad = n_blocks * block_size - n
    if pad:
        nonzeros = np.concatenate([nonzeros, np.repeat(nonzeros[-1:], pad)])
    return nonzeros.reshape(n_blocks, block_size)


def encode_vbr(fmap: FeatureMap, config: CodecConfig, scale: str = "adaptive") -> EncodedTensor:
    if not config.vbr:
        raise InvalidArgument("encode_vbr needs a config with vbr enabled")
    if fmap.format is not config.format:
        raise InvalidArgument(f"map is {fmap.format.name}, config expects {config.format.name}")
    mask = zero_mask(fmap)
    blocks = compact_blocks(fmap.raster()[mask], config.block_size)
    scales, mins, maxs, indices = encode_array(blocks, config, scale)
    return EncodedTensor(config, fmap.dims, scales, mins, maxs, indices, mask=mask)


def decode_vbr(t: EncodedTensor) -> FeatureMap:
    w, h, c = t.dims
    if t.mask is None or t.mask.size != w * h * c:
        raise CorruptStream("VBR stream has no mask matching its dimensions")
    nnz = int(np.count_nonzero(t.mask))
    if nnz > t.n_blocks * t.config.block_size:
        raise CorruptStream(f"mask marks {nnz} nonzeros but blocks hold {t.n_blocks * t.config.block_size}")
    fmt = t.config.format
    out = np.zeros(w * h * c, dtype=fmt.dtype)
    if t.n_blocks:
        out[t.mask] = decode_array(t).reshape(-1)[:nnz].astype(fmt.dtype)
    return FeatureMap(fmt, out.reshape(c, h, w))
