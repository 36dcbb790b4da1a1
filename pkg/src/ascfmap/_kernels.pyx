# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled block kernels.

Mirrors ``_fallback``. Integer samples travel as int64, FP16 samples as
float64 holding exactly representable half values.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport frexp, ldexp, rint, fabs

cnp.import_array()

NAME = "cython"

ctypedef long long i64
ctypedef unsigned char u8

cdef enum:
    ADAPTIVE = 0
    REVISED_ONLY = 1
    LOG_ONLY = 2


cdef inline void int_thresholds(i64 R, int kind, i64* th) noexcept nogil:
    cdef i64 r3 = 3 * R
    if kind == 0:
        th[0] = R >> 4
        th[1] = r3 >> 4
        th[2] = (5 * R) >> 4
        th[3] = (7 * R) >> 4
        th[4] = (9 * R) >> 4
        th[5] = (11 * R) >> 4
        th[6] = (7 * R) >> 3
    else:
        th[0] = R >> 6
        th[1] = r3 >> 6
        th[2] = (5 * R) >> 6
        th[3] = (7 * R) >> 6
        th[4] = r3 >> 4
        th[5] = r3 >> 3
        th[6] = r3 >> 2


cdef inline void int_points(i64 R, int kind, i64* p) noexcept nogil:
    p[0] = 0
    p[7] = R
    if kind == 0:
        p[1] = R >> 3
        p[2] = R >> 2
        p[3] = (3 * R) >> 3
        p[4] = R >> 1
        p[5] = (5 * R) >> 3
        p[6] = (3 * R) >> 2
    else:
        p[1] = R >> 5
        p[2] = R >> 4
        p[3] = (3 * R) >> 5
        p[4] = R >> 3
        p[5] = R >> 2
        p[6] = R >> 1


cdef double TH_FRAC[2][7]
cdef double PT_FRAC[2][8]


def _fill_tables():
    th = [[1 / 16, 3 / 16, 5 / 16, 7 / 16, 9 / 16, 11 / 16, 7 / 8],
          [1 / 64, 3 / 64, 5 / 64, 7 / 64, 3 / 16, 3 / 8, 3 / 4]]
    pt = [[0, 1 / 8, 2 / 8, 3 / 8, 4 / 8, 5 / 8, 6 / 8, 1],
          [0, 1 / 32, 1 / 16, 3 / 32, 1 / 8, 1 / 4, 1 / 2, 1]]
    for a in range(2):
        for b in range(7):
            TH_FRAC[a][b] = th[a][b]
        for b in range(8):
            PT_FRAC[a][b] = pt[a][b]


_fill_tables()


cdef inline double round_half(double x) noexcept nogil:
    # round-to-nearest-even onto the binary16 grid; inputs never overflow it
    cdef int e
    if x == 0.0:
        return x
    frexp(x, &e)
    e -= 11
    if e < -24:
        e = -24
    return ldexp(rint(ldexp(x, -e)), e)


cdef inline int pick(i64 xs, const i64* th) noexcept nogil:
    cdef int i, idx = 0
    for i in range(7):
        if xs > th[i]:
            idx = i + 1
    return idx


cdef inline int pickf(double xs, const double* th) noexcept nogil:
    cdef int i, idx = 0
    for i in range(7):
        if xs > th[i]:
            idx = i + 1
    return idx


def assign_shifted(xprime, R, int kind):
    cdef const i64[::1] xv = np.ascontiguousarray(xprime, dtype=np.int64)
    cdef const i64[::1] rv = np.ascontiguousarray(R, dtype=np.int64)
    cdef Py_ssize_t n = xv.shape[0], i
    out = np.empty(n, dtype=np.uint8)
    cdef u8[::1] ov = out
    cdef i64 th[7]
    with nogil:
        for i in range(n):
            int_thresholds(rv[i], kind, th)
            ov[i] = pick(xv[i], th)
    return out


cdef void encode_int(const i64[:, ::1] v, bint one_endpoint, int policy,
                     u8[::1] scales, i64[::1] mins, i64[::1] maxs,
                     u8[:, ::1] out, u8[::1] tmp) noexcept nogil:
    cdef Py_ssize_t n = v.shape[0], bs = v.shape[1], b, j
    cdef i64 lo, hi, R, x, loss_rev, loss_log, d
    cdef i64 th[7]
    cdef i64 pt[8]
    cdef int k
    for b in range(n):
        hi = v[b, 0]
        lo = v[b, 0]
        for j in range(1, bs):
            x = v[b, j]
            if x > hi:
                hi = x
            if x < lo:
                lo = x
        if one_endpoint:
            lo = 0
        R = hi - lo
        mins[b] = lo
        maxs[b] = hi
        scales[b] = 0
        loss_rev = 0
        if policy != LOG_ONLY:
            int_thresholds(R, 0, th)
            int_points(R, 0, pt)
            for j in range(bs):
                x = v[b, j] - lo
                k = pick(x, th)
                out[b, j] = k
                d = x - pt[k]
                loss_rev += d if d >= 0 else -d
        if policy != REVISED_ONLY and R != 0:
            int_thresholds(R, 1, th)
            int_points(R, 1, pt)
            loss_log = 0
            for j in range(bs):
                x = v[b, j] - lo
                k = pick(x, th)
                tmp[j] = k
                d = x - pt[k]
                loss_log += d if d >= 0 else -d
            if policy == LOG_ONLY or loss_log < loss_rev:
                scales[b] = 1
                for j in range(bs):
                    out[b, j] = tmp[j]


cdef void encode_float(const double[:, ::1] v, bint one_endpoint, int policy,
                       u8[::1] scales, double[::1] mins, double[::1] maxs,
                       u8[:, ::1] out, u8[::1] tmp) noexcept nogil:
    cdef Py_ssize_t n = v.shape[0], bs = v.shape[1], b, j
    cdef double lo, hi, R, x, loss_rev, loss_log
    cdef double th[7]
    cdef double pt[8]
    cdef int k, s
    for b in range(n):
        hi = v[b, 0]
        lo = v[b, 0]
        for j in range(1, bs):
            x = v[b, j]
            if x > hi:
                hi = x
            if x < lo:
                lo = x
        if one_endpoint:
            lo = 0.0
            hi = hi + 0.0
        R = hi - lo
        mins[b] = lo
        maxs[b] = hi
        scales[b] = 0
        loss_rev = 0.0
        if policy != LOG_ONLY:
            for k in range(7):
                th[k] = R * TH_FRAC[0][k]
            for k in range(8):
                pt[k] = round_half(lo + R * PT_FRAC[0][k])
            for j in range(bs):
                x = v[b, j]
                k = pickf(x - lo, th)
                out[b, j] = k
                loss_rev += fabs(x - pt[k])
        if policy != REVISED_ONLY and R != 0.0:
            for k in range(7):
                th[k] = R * TH_FRAC[1][k]
            for k in range(8):
                pt[k] = round_half(lo + R * PT_FRAC[1][k])
            loss_log = 0.0
            for j in range(bs):
                x = v[b, j]
                k = pickf(x - lo, th)
                tmp[j] = k
                loss_log += fabs(x - pt[k])
            if policy == LOG_ONLY or loss_log < loss_rev:
                scales[b] = 1
                for j in range(bs):
                    out[b, j] = tmp[j]


def encode_blocks(values, bint one_endpoint, int policy, bint is_float):
    n, bs = values.shape
    scales = np.zeros(n, dtype=np.uint8)
    indices = np.zeros((n, bs), dtype=np.uint8)
    tmp = np.zeros(bs, dtype=np.uint8)
    cdef const i64[:, ::1] iv
    cdef const double[:, ::1] fv
    cdef u8[::1] sv = scales
    cdef u8[:, ::1] ov = indices
    cdef u8[::1] tv = tmp
    cdef i64[::1] imin, imax
    cdef double[::1] fmin, fmax
    if is_float:
        fv = np.ascontiguousarray(values, dtype=np.float64)
        mins = np.zeros(n, dtype=np.float64)
        maxs = np.zeros(n, dtype=np.float64)
        fmin = mins
        fmax = maxs
        with nogil:
            encode_float(fv, one_endpoint, policy, sv, fmin, fmax, ov, tv)
    else:
        iv = np.ascontiguousarray(values, dtype=np.int64)
        mins = np.zeros(n, dtype=np.int64)
        maxs = np.zeros(n, dtype=np.int64)
        imin = mins
        imax = maxs
        with nogil:
            encode_int(iv, one_endpoint, policy, sv, imin, imax, ov, tv)
    return scales, mins, maxs, indices


def decode_blocks(scales, mins, maxs, indices, bint is_float):
    cdef const u8[::1] sv = np.ascontiguousarray(scales, dtype=np.uint8)
    cdef const u8[:, ::1] iv = np.ascontiguousarray(indices, dtype=np.uint8)
    cdef Py_ssize_t n = iv.shape[0], bs = iv.shape[1], b, j
    cdef const i64[::1] imin, imax
    cdef const double[::1] fmin, fmax
    cdef i64[:, ::1] io
    cdef double[:, ::1] fo
    cdef i64 pt[8]
    cdef double fpt[8]
    cdef int k
    if is_float:
        fmin = np.ascontiguousarray(mins, dtype=np.float64)
        fmax = np.ascontiguousarray(maxs, dtype=np.float64)
        out = np.empty((n, bs), dtype=np.float64)
        fo = out
        with nogil:
            for b in range(n):
                for k in range(8):
                    fpt[k] = round_half(fmin[b] + (fmax[b] - fmin[b]) * PT_FRAC[sv[b]][k])
                for j in range(bs):
                    fo[b, j] = fpt[iv[b, j]]
    else:
        imin = np.ascontiguousarray(mins, dtype=np.int64)
        imax = np.ascontiguousarray(maxs, dtype=np.int64)
        out = np.empty((n, bs), dtype=np.int64)
        io = out
        with nogil:
            for b in range(n):
                int_points(imax[b] - imin[b], sv[b], pt)
                for j in range(bs):
                    io[b, j] = imin[b] + pt[iv[b, j]]
    return out


def to_half(values):
    """Round binary64 values onto the binary16 grid (nearest, ties to even)."""
    cdef const double[::1] v = np.ascontiguousarray(values, dtype=np.float64).reshape(-1)
    out = np.empty(v.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(v.shape[0]):
            o[i] = round_half(v[i])
    return out
