"""Structural model of the interpolation datapath.

Each variant builds an expression DAG that computes the interpolation
points and thresholds of both scales from the endpoints ``M`` and ``m``.
Nodes are hash-consed, so an expression that appears twice is one node;
the operator census therefore counts hardware after sharing.

Census convention: add/sub nodes are adders, multiplications by a
non-power-of-two constant are multipliers, divisions by a non-power-of-two
constant are dividers, shifts and multiplexers are free.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import numpy as np

from . import scales
from .scales import ScaleKind

INPUTS = ("M", "m", "scale", "index")


class DatapathVariant(enum.Enum):
    LINEAR_WITH_DIVIDERS = "linear"
    REVISED_LINEAR = "revised"
    REVISED_LINEAR_SHIFTED = "revised-shifted"


# Table targets for the census, (dividers, multipliers, adders).
PUBLISHED_COUNTS = {
    DatapathVariant.LINEAR_WITH_DIVIDERS: (12, 20, 26),
    DatapathVariant.REVISED_LINEAR: (0, 18, 19),
    DatapathVariant.REVISED_LINEAR_SHIFTED: (0, 5, 2),
}


@dataclass(frozen=True)
class OpCount:
    dividers: int
    multipliers: int
    adders: int

    def as_tuple(self):
        return (self.dividers, self.multipliers, self.adders)


def _split_pow2(n: int) -> tuple[int, int]:
    """n = odd * 2**shift"""
    shift = (n & -n).bit_length() - 1
    return n >> shift, shift


class ExprDag:
    def __init__(self, shifted: bool):
        self.shifted = shifted
        self.nodes: list[tuple] = []
        self._ids: dict[tuple, int] = {}
        self.outputs: dict[str, int] = {}

    def _node(self, key: tuple) -> int:
        if key not in self._ids:
            self._ids[key] = len(self.nodes)
            self.nodes.append(key)
        return self._ids[key]

    def input(self, name: str) -> int:
        return self._node(("input", name))

    def const(self, value: int) -> int:
        return self._node(("const", value))

    def sub(self, a: int, b: int) -> int:
        return self._node(("sub", a, b))

    def add(self, a: int, b: int) -> int:
        return self._node(("add", min(a, b), max(a, b)))

    def shl(self, s: int, a: int) -> int:
        return a if s == 0 else self._node(("shl", s, a))

    def shr(self, s: int, a: int) -> int:
        return a if s == 0 else self._node(("shr", s, a))

    def mul(self, k: int, a: int) -> int:
        odd, s = _split_pow2(k)
        if odd != 1:
            a = self._node(("mul", odd, a))
        return self.shl(s, a)

    def div(self, d: int, a: int) -> int:
        odd, s = _split_pow2(d)
        a = self.shr(s, a)
        return a if odd == 1 else self._node(("div", odd, a))

    def mux(self, options) -> int:
        return self._node(("mux",) + tuple(options))

    def scaled(self, frac: Fraction, a: int) -> int:
        """floor(frac * a) as a multiply followed by a divide."""
        if frac == 0:
            return self.const(0)
        return self.div(frac.denominator, self.mul(frac.numerator, a))

    def blend(self, frac: Fraction, m: int, M: int) -> int:
        """floor(m + frac * (M - m)) computed without forming the range."""
        if frac == 0:
            return m
        if frac == 1:
            return M
        den = frac.denominator
        b = frac.numerator
        a = den - b
        g = gcd(gcd(a, b), den)
        a, b, den = a // g, b // g, den // g
        return self.div(den, self.add(self.mul(a, m), self.mul(b, M)))

    def evaluate(self, values: dict) -> list:
        """Value of every node; inputs may be ints or integer numpy arrays."""
        out = []
        for key in self.nodes:
            op = key[0]
            if op == "input":
                v = values.get(key[1], 0)
            elif op == "const":
                v = key[1]
            elif op == "sub":
                v = out[key[1]] - out[key[2]]
            elif op == "add":
                v = out[key[1]] + out[key[2]]
            elif op == "shl":
                v = out[key[2]] << key[1]
            elif op == "shr":
                v = out[key[2]] >> key[1]
            elif op == "mul":
                v = out[key[2]] * key[1]
            elif op == "div":
                v = out[key[2]] // key[1]
            elif op == "mux":
                sel = values.get("scale", 0) * 8 + values.get("index", 0)
                v = np.choose(sel, [out[o] for o in key[1:]]) if isinstance(sel, np.ndarray) else out[key[1 + sel]]
            else:
                raise ValueError(f"unknown node {key}")
            out.append(v)
        return out

    def output_values(self, values: dict) -> dict:
        node_values = self.evaluate(values)
        return {label: node_values[i] for label, i in self.outputs.items()}

    def constants(self, op: str) -> set[int]:
        return {key[1] for key in self.nodes if key[0] == op}


def _scale_names(variant: DatapathVariant):
    first = "linear" if variant is DatapathVariant.LINEAR_WITH_DIVIDERS else "revised"
    return (first, "log")


def _fractions(name: str):
    if name == "linear":
        points = [Fraction(i, 7) for i in range(8)]
        thresholds = [Fraction(2 * i - 1, 14) for i in range(1, 8)]
        return points, thresholds
    kind = ScaleKind.REVISED_LINEAR if name == "revised" else ScaleKind.LOG_LINEAR
    return list(scales.POINT_FRACTIONS[kind]), list(scales.THRESHOLD_FRACTIONS[kind])


def build_interpolation_dag(variant: DatapathVariant) -> ExprDag:
    """DAG producing both scales' points and thresholds for ``variant``.

    Unshifted variants output absolute points and thresholds.  The shifted
    variant forms ``R = M - m`` once, expresses every shifted point and
    threshold as a shift of ``R`` or of an odd multiple of it, and
    reconstructs an absolute point as ``m + mux(shifted points)`` under the
    ``scale``/``index`` controls; its thresholds stay in the shifted domain.
    """
    variant = DatapathVariant(variant)
    shifted = variant is DatapathVariant.REVISED_LINEAR_SHIFTED
    dag = ExprDag(shifted)
    M, m = dag.input("M"), dag.input("m")
    if shifted:
        R = dag.sub(M, m)
        shifted_points = []
        for name in _scale_names(variant):
            points, thresholds = _fractions(name)
            for i, f in enumerate(points):
                node = dag.scaled(f, R)
                dag.outputs[f"{name}.shifted_point[{i}]"] = node
                shifted_points.append(node)
            for i, f in enumerate(thresholds, start=1):
                dag.outputs[f"{name}.threshold[{i}]"] = dag.scaled(f, R)
        dag.outputs["value"] = dag.add(m, dag.mux(shifted_points))
        return dag
    for name in _scale_names(variant):
        points, thresholds = _fractions(name)
        for i, f in enumerate(points):
            dag.outputs[f"{name}.point[{i}]"] = dag.blend(f, m, M)
        for i, f in enumerate(thresholds, start=1):
            dag.outputs[f"{name}.threshold[{i}]"] = dag.blend(f, m, M)
    return dag


def count_ops(dag: ExprDag) -> OpCount:
    ops = [key[0] for key in dag.nodes]
    return OpCount(
        dividers=ops.count("div"),
        multipliers=ops.count("mul"),
        adders=ops.count("add") + ops.count("sub"),
    )


def dag_tables(dag: ExprDag, m, M) -> dict:
    """Evaluate a DAG into ``{scale name: (points, shifted thresholds)}``.

    ``m`` and ``M`` may be ints or equally shaped integer arrays.  Points are
    absolute; thresholds are relative to ``m`` for every variant.
    """
    base = {"M": M, "m": m}
    values = dag.output_values(base)
    names = sorted({label.split(".")[0] for label in dag.outputs if "." in label},
                   key=lambda n: n == "log")
    tables = {}
    for s, name in enumerate(names):
        if dag.shifted:
            points = [dag.output_values({**base, "scale": s, "index": i})["value"] for i in range(8)]
            thresholds = [values[f"{name}.threshold[{i}]"] for i in range(1, 8)]
        else:
            points = [values[f"{name}.point[{i}]"] for i in range(8)]
            thresholds = [values[f"{name}.threshold[{i}]"] - m for i in range(1, 8)]
        tables[name] = (points, thresholds)
    return tables


def priority_encode(compare_bits) -> int:
    """Index of the highest asserted comparator plus one, or 0."""
    bits = list(compare_bits)
    if len(bits) != 7:
        raise ValueError("expected seven comparator outputs")
    for i in range(6, -1, -1):
        if bits[i]:
            return i + 1
    return 0


def priority_encode_many(compare_bits: np.ndarray) -> np.ndarray:
    """Row-wise :func:`priority_encode` over an ``(n, 7)`` boolean array."""
    bits = np.asarray(compare_bits, dtype=bool)
    last = 6 - np.argmax(bits[:, ::-1], axis=1)
    return np.where(bits.any(axis=1), last + 1, 0).astype(np.uint8)


def int8_pairs() -> tuple[np.ndarray, np.ndarray]:
    """Every INT8 endpoint pair with m <= M."""
    lo, hi = np.triu_indices(256)
    return lo.astype(np.int64) - 128, hi.astype(np.int64) - 128


def reference_tables(name: str, m: np.ndarray, M: np.ndarray):
    """Expected outputs from the scales module, for cross-checking a DAG."""
    R = M - m
    if name == "linear":
        pts = [np.array([int(np.floor(p)) for p in scales.linear_reference_points(a, b)])
               for a, b in zip(m.tolist(), M.tolist())]
        pts = np.array(pts).T
        ths = [((2 * i - 1) * R) // 14 for i in range(1, 8)]
        return list(pts), ths
    kind = ScaleKind.REVISED_LINEAR if name == "revised" else ScaleKind.LOG_LINEAR
    pts = [[] for _ in range(8)]
    ths = [[] for _ in range(7)]
    for a, r in zip(m.tolist(), R.tolist()):
        for i, p in enumerate(scales.shifted_points(kind, r)):
            pts[i].append(a + p)
        for i, t in enumerate(scales.shifted_thresholds(kind, r)):
            ths[i].append(t)
    return [np.array(p) for p in pts], [np.array(t) for t in ths]


def equivalence_check(variant: DatapathVariant) -> dict:
    """Compare DAG outputs with the scales module over all INT8 pairs."""
    dag = build_interpolation_dag(variant)
    m, M = int8_pairs()
    tables = dag_tables(dag, m, M)
    result = {}
    for name, (points, thresholds) in tables.items():
        ref_points, ref_thresholds = reference_tables(name, m, M)
        mismatches = sum(int(np.count_nonzero(np.asarray(p) != r)) for p, r in zip(points, ref_points))
        mismatches += sum(
            int(np.count_nonzero(np.asarray(t) != r)) for t, r in zip(thresholds, ref_thresholds)
        )
        result[name] = {"pairs": int(len(m)), "mismatches": mismatches}
    return result


def hw_report(check: bool = True) -> dict:
    report = {"convention": "add/sub = adder; x non-pow2 const = multiplier; / non-pow2 const = divider; shifts, muxes free",
              "variants": {}}
    for variant in DatapathVariant:
        dag = build_interpolation_dag(variant)
        counts = count_ops(dag)
        entry = {
            "dividers": counts.dividers,
            "multipliers": counts.multipliers,
            "adders": counts.adders,
            "published": dict(zip(("dividers", "multipliers", "adders"), PUBLISHED_COUNTS[variant])),
            "matches_published": counts.as_tuple() == PUBLISHED_COUNTS[variant],
            "multiplier_constants": sorted(dag.constants("mul")),
        }
        if check:
            entry["equivalence"] = equivalence_check(variant)
        report["variants"][variant.value] = entry
    return report
