"""Interpolation points and thresholds for the three block scales.

All scales are expressed in the shifted domain, i.e. relative to the
minimum endpoint ``m``, where every point and threshold is a fixed
fraction of the range ``R = M - m``.  Integer ranges use floor division,
which on the nonnegative shifted domain is an arithmetic right shift.
Float ranges are evaluated in binary64; every fraction has a power-of-two
denominator so the products are exact.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidArgument


class ScaleKind(enum.IntEnum):
    REVISED_LINEAR = 0
    LOG_LINEAR = 1
    # reference only, never written to a stream
    LINEAR = 2


def _fr(*pairs):
    return tuple(Fraction(n, d) for n, d in pairs)


POINT_FRACTIONS = {
    ScaleKind.REVISED_LINEAR: _fr((0, 1), (1, 8), (2, 8), (3, 8), (4, 8), (5, 8), (6, 8), (1, 1)),
    ScaleKind.LOG_LINEAR: _fr((0, 1), (1, 32), (1, 16), (3, 32), (1, 8), (1, 4), (1, 2), (1, 1)),
}

THRESHOLD_FRACTIONS = {
    ScaleKind.REVISED_LINEAR: _fr((1, 16), (3, 16), (5, 16), (7, 16), (9, 16), (11, 16), (7, 8)),
    ScaleKind.LOG_LINEAR: _fr((1, 64), (3, 64), (5, 64), (7, 64), (3, 16), (3, 8), (3, 4)),
}


def _check_kind(kind) -> ScaleKind:
    kind = ScaleKind(kind)
    if kind is ScaleKind.LINEAR:
        raise InvalidArgument("the plain linear scale has no shifted table; use linear_reference_points")
    return kind


def _is_int(v) -> bool:
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool)


def _scaled(fractions, R):
    if R < 0:
        raise InvalidArgument(f"range must be nonnegative, got {R}")
    if _is_int(R):
        R = int(R)
        return [(f.numerator * R) // f.denominator for f in fractions]
    R = float(R)
    return [R * f.numerator / f.denominator for f in fractions]


def shifted_points(kind, R) -> list:
    return _scaled(POINT_FRACTIONS[_check_kind(kind)], R)


def shifted_thresholds(kind, R) -> list:
    return _scaled(THRESHOLD_FRACTIONS[_check_kind(kind)], R)


@dataclass(frozen=True)
class InterpolationTable:
    kind: ScaleKind
    m: object
    M: object
    points: tuple
    thresholds: tuple

    @property
    def range(self):
        return self.M - self.m


def build_table(kind, m, M) -> InterpolationTable:
    if m > M:
        raise InvalidArgument(f"minimum endpoint {m} exceeds maximum endpoint {M}")
    kind = _check_kind(kind)
    if _is_int(m) and _is_int(M):
        m, M = int(m), int(M)
    else:
        m, M = float(m), float(M)
    R = M - m
    points = tuple(m + p for p in shifted_points(kind, R))
    return InterpolationTable(kind, m, M, points, tuple(shifted_thresholds(kind, R)))


def assign_index(x, table: InterpolationTable) -> int:
    """Index of the highest threshold strictly exceeded by ``x - m``."""
    if not table.m <= x <= table.M:
        raise InvalidArgument(f"sample {x} outside block range [{table.m}, {table.M}]")
    shifted = x - table.m
    index = 0
    for i, th in enumerate(table.thresholds, start=1):
        if shifted > th:
            index = i
    return index


def assign_indices(xs, table: InterpolationTable) -> np.ndarray:
    """Vectorised :func:`assign_index` over an array of samples."""
    xs = np.asarray(xs)
    if xs.size and (xs.min() < table.m or xs.max() > table.M):
        raise InvalidArgument("samples outside the block range")
    shifted = xs - table.m
    th = np.asarray(table.thresholds)
    # thresholds are non-decreasing, so the exceeded set is a prefix
    return (shifted[..., None] > th).sum(axis=-1).astype(np.uint8)


def linear_reference_points(m, M) -> list[Fraction]:
    """Exact points of the plain 7-step linear scale."""
    if m > M:
        raise InvalidArgument(f"minimum endpoint {m} exceeds maximum endpoint {M}")
    m, M = Fraction(m), Fraction(M)
    return [(i * M + (7 - i) * m) / 7 for i in range(8)]
