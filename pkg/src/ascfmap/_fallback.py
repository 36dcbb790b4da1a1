"""Pure numpy implementation of the block kernels.

Same contract as the compiled ``_kernels`` module; used when the extension
is not built or when ``ASC_BACKEND=python`` is set.
"""

import numpy as np

NAME = "python"

ADAPTIVE, REVISED_ONLY, LOG_ONLY = 0, 1, 2

# numerators and denominators per scale: 0 = revised linear, 1 = log-linear
_POINT_NUM = np.array([[0, 1, 2, 3, 4, 5, 6, 1], [0, 1, 1, 3, 1, 1, 1, 1]], dtype=np.int64)
_POINT_DEN = np.array([[1, 8, 8, 8, 8, 8, 8, 1], [1, 32, 16, 32, 8, 4, 2, 1]], dtype=np.int64)
_TH_NUM = np.array([[1, 3, 5, 7, 9, 11, 7], [1, 3, 5, 7, 3, 3, 3]], dtype=np.int64)
_TH_DEN = np.array([[16, 16, 16, 16, 16, 16, 8], [64, 64, 64, 64, 16, 8, 4]], dtype=np.int64)


def _points(R, kind, is_float):
    if is_float:
        return R[:, None] * (_POINT_NUM[kind] / _POINT_DEN[kind])
    return (R[:, None] * _POINT_NUM[kind]) // _POINT_DEN[kind]


def _thresholds(R, kind, is_float):
    if is_float:
        return R[:, None] * (_TH_NUM[kind] / _TH_DEN[kind])
    return (R[:, None] * _TH_NUM[kind]) // _TH_DEN[kind]


def _to_half(x):
    return x.astype(np.float16).astype(np.float64)


def assign_shifted(xprime, R, kind):
    xprime = np.asarray(xprime, dtype=np.int64)
    R = np.asarray(R, dtype=np.int64)
    th = _thresholds(R, kind, False)
    return (xprime[:, None] > th).sum(axis=1).astype(np.uint8)


def _trial(values, m, R, kind, is_float):
    shifted = values - m[:, None]
    th = _thresholds(R, kind, is_float)
    idx = (shifted[:, :, None] > th[:, None, :]).sum(axis=2)
    recon = m[:, None] + np.take_along_axis(_points(R, kind, is_float), idx, axis=1)
    if is_float:
        recon = _to_half(recon)
    loss = np.abs(values - recon).sum(axis=1)
    return idx.astype(np.uint8), loss


def encode_blocks(values, one_endpoint, policy, is_float):
    dtype = np.float64 if is_float else np.int64
    values = np.ascontiguousarray(values, dtype=dtype)
    n = values.shape[0]
    maxs = values.max(axis=1) if n else np.zeros(0, dtype)
    if one_endpoint:
        mins = np.zeros(n, dtype)
        if is_float:
            maxs = maxs + 0.0  # -0.0 -> +0.0
    else:
        mins = values.min(axis=1) if n else np.zeros(0, dtype)
    R = maxs - mins
    if policy == LOG_ONLY:
        indices, _ = _trial(values, mins, R, 1, is_float)
        scales = np.ones(n, np.uint8)
    else:
        indices, loss_rev = _trial(values, mins, R, 0, is_float)
        scales = np.zeros(n, np.uint8)
        if policy == ADAPTIVE:
            idx_log, loss_log = _trial(values, mins, R, 1, is_float)
            use_log = loss_log < loss_rev
            indices[use_log] = idx_log[use_log]
            scales[use_log] = 1
    # a zero range cannot signal the log-linear scale; both scales coincide
    scales[R == 0] = 0
    return scales, mins, maxs, indices


def decode_blocks(scales, mins, maxs, indices, is_float):
    dtype = np.float64 if is_float else np.int64
    mins = np.asarray(mins, dtype=dtype)
    maxs = np.asarray(maxs, dtype=dtype)
    idx = np.asarray(indices, dtype=np.int64)
    R = maxs - mins
    out = np.empty(idx.shape, dtype=dtype)
    for kind in (0, 1):
        sel = np.asarray(scales) == kind
        if sel.any():
            pts = _points(R[sel], kind, is_float)
            out[sel] = mins[sel, None] + np.take_along_axis(pts, idx[sel], axis=1)
    if is_float:
        out = _to_half(out)
    return out


def to_half(values):
    return _to_half(np.asarray(values, dtype=np.float64).reshape(-1))
