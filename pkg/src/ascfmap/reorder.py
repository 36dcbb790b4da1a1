"""Offline channel reordering by similarity.

Channels that look alike are placed next to each other so a block's channel
depth spans correlated planes.  Two pairing strategies are provided:

* greedy: repeatedly take the most similar remaining pair;
* heuristic: repeatedly take the remaining channel with the smallest total
  similarity (the most isolated one) and pair it with its best partner.

For block depths beyond two, pairs are merged recursively using the mean
similarity between groups.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .tensor import FeatureMap

_TIE = 1e-12


@dataclass(frozen=True)
class ChannelPermutation:
    """``order[k]`` is the source channel placed at position ``k``."""

    order: tuple

    def __init__(self, order):
        if isinstance(order, ChannelPermutation):
            order = order.order
        order = tuple(int(o) for o in order)
        if sorted(order) != list(range(len(order))):
            raise InvalidArgument(f"not a permutation of 0..{len(order) - 1}: {order}")
        object.__setattr__(self, "order", order)

    def __len__(self):
        return len(self.order)

    @classmethod
    def identity(cls, n: int) -> "ChannelPermutation":
        return cls(range(n))


def similarity_matrix(calibration) -> np.ndarray:
    """Mean absolute cosine similarity between channel planes.

    Channels that are all zero get similarity 0 to everything.  The
    diagonal is set to 1 and is ignored by the pairing routines.
    """
    maps = [calibration] if isinstance(calibration, FeatureMap) else list(calibration)
    if not maps:
        raise InvalidArgument("need at least one calibration map")
    n = maps[0].channels
    total = np.zeros((n, n))
    for fmap in maps:
        if fmap.channels != n:
            raise InvalidArgument(f"calibration maps disagree on channel count ({fmap.channels} vs {n})")
        planes = fmap.data.reshape(n, -1).astype(np.float64)
        norms = np.linalg.norm(planes, axis=1)
        safe = np.where(norms > 0, norms, 1.0)
        unit = planes / safe[:, None]
        sim = np.abs(unit @ unit.T)
        sim[norms == 0, :] = 0.0
        sim[:, norms == 0] = 0.0
        total += np.clip(sim, 0.0, 1.0)
    total /= len(maps)
    np.fill_diagonal(total, 1.0)
    return total


def _check(matrix) -> np.ndarray:
    s = np.asarray(matrix, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise InvalidArgument("similarity matrix must be square")
    if not np.allclose(s, s.T):
        raise InvalidArgument("similarity matrix must be symmetric")
    return s


def _greedy_pairs(s: np.ndarray, ids: list[int]):
    remaining = list(ids)
    pairs = []
    while len(remaining) > 1:
        best = None
        for a, i in enumerate(remaining):
            for j in remaining[a + 1:]:
                lo, hi = min(i, j), max(i, j)
                if best is None or s[lo, hi] > best[0] or (s[lo, hi] == best[0] and (lo, hi) < best[1]):
                    best = (s[lo, hi], (lo, hi))
        lo, hi = best[1]
        pairs.append((lo, hi))
        remaining.remove(lo)
        remaining.remove(hi)
    return pairs, remaining


def _heuristic_pairs(s: np.ndarray, ids: list[int]):
    remaining = sorted(ids)
    pairs = []
    while len(remaining) > 1:
        sub = s[np.ix_(remaining, remaining)].copy()
        np.fill_diagonal(sub, 0.0)
        sums = sub.sum(axis=1)
        # lowest id wins among (near-)equal sums
        first = int(np.flatnonzero(sums <= sums.min() + _TIE)[0])
        row = sub[first].copy()
        row[first] = -np.inf
        partner = int(np.flatnonzero(row >= row.max() - _TIE)[0])
        i, j = remaining[first], remaining[partner]
        pairs.append((min(i, j), max(i, j)))
        remaining.remove(i)
        remaining.remove(j)
    return pairs, remaining


_PAIRERS = {"greedy": _greedy_pairs, "heuristic": _heuristic_pairs}


def _pair_order(matrix, method: str) -> list[int]:
    s = _check(matrix)
    pairs, leftover = _PAIRERS[method](s, list(range(len(s))))
    return [c for pair in pairs for c in pair] + leftover


def greedy_pairing(matrix) -> ChannelPermutation:
    return ChannelPermutation(_pair_order(matrix, "greedy"))


def heuristic_pairing(matrix) -> ChannelPermutation:
    return ChannelPermutation(_pair_order(matrix, "heuristic"))


def channel_order(matrix, method: str = "heuristic", group_size: int = 2) -> ChannelPermutation:
    """Pair channels, then pair the pairs, until groups reach ``group_size``."""
    if method not in _PAIRERS:
        raise InvalidArgument(f"unknown reordering method {method!r}")
    s = _check(matrix)
    groups = [[c] for c in range(len(s))]
    size = 1
    while size < group_size and len(groups) > 1:
        k = len(groups)
        gs = np.zeros((k, k))
        for a in range(k):
            for b in range(a + 1, k):
                gs[a, b] = gs[b, a] = s[np.ix_(groups[a], groups[b])].mean()
        pairs, leftover = _PAIRERS[method](gs, list(range(k)))
        groups = [groups[a] + groups[b] for a, b in pairs] + [groups[a] for a in leftover]
        size *= 2
    return ChannelPermutation([c for g in groups for c in g])


def apply_permutation(fmap: FeatureMap, perm) -> FeatureMap:
    perm = ChannelPermutation(perm)
    if len(perm) != fmap.channels:
        raise InvalidArgument(f"permutation covers {len(perm)} channels, map has {fmap.channels}")
    return FeatureMap(fmap.format, fmap.data[list(perm.order)])


def invert(perm) -> ChannelPermutation:
    order = ChannelPermutation(perm).order
    inverse = [0] * len(order)
    for k, src in enumerate(order):
        inverse[src] = k
    return ChannelPermutation(inverse)
