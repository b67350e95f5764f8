"""Per-class F1, macro F1 and accuracy from a thresholded confusion matrix."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import EmptyTestSet


@dataclass(frozen=True)
class Confusion:
    tp: int  # anxious predicted anxious
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class Metrics:
    f1_anxious: float
    f1_not_anxious: float
    macro_f1: float
    accuracy: float
    confusion: Confusion
    threshold: float = 0.5

    def to_dict(self) -> dict:
        return asdict(self)


def _f1(tp: int, fp: int, fn: int) -> float:
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def metrics_from_confusion(c: Confusion, threshold: float = 0.5) -> Metrics:
    if c.total == 0:
        raise EmptyTestSet("no rows to evaluate")
    f1_a = _f1(c.tp, c.fp, c.fn)
    # the not-anxious class sees the same table with roles swapped
    f1_na = _f1(c.tn, c.fn, c.fp)
    return Metrics(f1_a, f1_na, (f1_a + f1_na) / 2, (c.tp + c.tn) / c.total, c, threshold)


def confusion(y_true, y_pred) -> Confusion:
    t = np.asarray(y_true).astype(bool)
    p = np.asarray(y_pred).astype(bool)
    return Confusion(int((t & p).sum()), int((~t & p).sum()), int((t & ~p).sum()), int((~t & ~p).sum()))


def evaluate_predictions(y_true, p_anxious, threshold: float = 0.5) -> Metrics:
    y_true = np.asarray(y_true)
    if len(y_true) == 0:
        raise EmptyTestSet("no rows to evaluate")
    pred = np.asarray(p_anxious) > threshold
    return metrics_from_confusion(confusion(y_true, pred), threshold)
