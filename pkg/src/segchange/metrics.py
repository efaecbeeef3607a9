"""Change map fusion and accuracy assessment.

The changed class is the positive class. Overall accuracy, F1, and Cohen's
kappa are computed from the pixel confusion counts, with explicit guards
for the degenerate all-negative case: F1 is 0 when there are no positives
anywhere, and kappa is 0 when chance agreement is exactly 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .rasters import ChangeMap

__all__ = ["MetricsRecord", "evaluate", "fuse"]


@dataclass(frozen=True)
class MetricsRecord:
    """Pixel confusion counts plus OA, F1, and kappa."""

    tp: int
    fp: int
    fn: int
    tn: int
    oa: float
    f1: float
    kc: float

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int, tn: int) -> "MetricsRecord":
        total = tp + fp + fn + tn
        if total <= 0:
            raise ValueError("confusion counts sum to zero")
        oa = (tp + tn) / total
        f1_denom = 2 * tp + fp + fn
        f1 = 2 * tp / f1_denom if f1_denom else 0.0
        p_e = ((tp + fn) * (tp + fp) + (fp + tn) * (fn + tn)) / (total * total)
        kc = 0.0 if p_e == 1.0 else (oa - p_e) / (1.0 - p_e)
        return cls(tp=tp, fp=fp, fn=fn, tn=tn, oa=oa, f1=f1, kc=kc)


def fuse(a: ChangeMap, b: ChangeMap) -> ChangeMap:
    """Pixelwise OR of two change maps."""
    if (a.width, a.height) != (b.width, b.height):
        raise DimensionError(
            f"change maps disagree: {a.width}x{a.height} vs {b.width}x{b.height}")
    return ChangeMap(a.width, a.height, a.changed | b.changed)


def evaluate(pred: ChangeMap, truth: ChangeMap) -> MetricsRecord:
    """Confusion counts and OA/F1/kappa of a prediction against truth."""
    if (pred.width, pred.height) != (truth.width, truth.height):
        raise DimensionError(
            f"prediction is {pred.width}x{pred.height} but truth is "
            f"{truth.width}x{truth.height}")
    p = pred.changed
    t = truth.changed
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    tn = int(np.count_nonzero(~p & ~t))
    return MetricsRecord.from_counts(tp, fp, fn, tn)
