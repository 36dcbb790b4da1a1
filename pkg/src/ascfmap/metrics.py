"""Reconstruction quality metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument
from .tensor import FeatureMap


@dataclass(frozen=True)
class QualityReport:
    l1_total: float
    l1_mean: float
    mse: float
    psnr: float  # math.inf when the maps are identical
    max_abs_error: float
    scale_usage: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {
            "l1_total": self.l1_total,
            "l1_mean": self.l1_mean,
            "mse": self.mse,
            "psnr": "inf" if math.isinf(self.psnr) else self.psnr,
            "max_abs_error": self.max_abs_error,
        }
        if self.scale_usage:
            out["scale_usage"] = dict(self.scale_usage)
        return out


def quality(original: FeatureMap, reconstructed: FeatureMap, scale_usage=None) -> QualityReport:
    if original.format is not reconstructed.format or original.dims != reconstructed.dims:
        raise InvalidArgument(
            f"cannot compare {original.format.name}{original.dims} "
            f"with {reconstructed.format.name}{reconstructed.dims}"
        )
    diff = original.data.astype(np.float64) - reconstructed.data.astype(np.float64)
    absdiff = np.abs(diff)
    mse = float(np.mean(diff * diff))
    peak = original.format.peak
    psnr = math.inf if mse == 0 else 10.0 * math.log10(peak * peak / mse)
    l1 = float(absdiff.sum())
    return QualityReport(
        l1_total=int(l1) if not original.format.is_float else l1,
        l1_mean=l1 / original.size,
        mse=mse,
        psnr=psnr,
        max_abs_error=float(absdiff.max()),
        scale_usage=dict(scale_usage or {}),
    )
