"""Adaptive-scale block compression for DNN feature maps."""

from .backend import NAME as BACKEND
from .bitstream import RateReport, deserialize, measured_rate, nominal_rate, serialize
from .codec import (
    CodecConfig,
    EncodedBlock,
    EncodedTensor,
    EndpointMode,
    block_l1,
    decode,
    decode_block,
    encode,
    encode_block,
    find_endpoints,
)
from .errors import (
    AscError,
    BadMagic,
    BadVersion,
    CorruptStream,
    InvalidArgument,
    InvalidSample,
    ModeViolation,
    TrailingData,
    Truncated,
    Unsupported,
)
from .scales import InterpolationTable, ScaleKind, assign_index, build_table
from .tensor import (
    Block,
    BlockShape,
    FeatureMap,
    SampleFormat,
    derive_cubical_shape,
    load_fmap,
    partition,
    reassemble,
    store_fmap,
)
from .vbr import decode_vbr, encode_vbr

__version__ = "0.1.0"
