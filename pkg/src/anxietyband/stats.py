"""Kendall tau-b rank correlation and significance-based feature selection."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AllTied, EmptySelectionWarning


@dataclass(frozen=True)
class CorrelationResult:
    tau_b: float
    p_value: float
    n: int


def _tie_sums(sorted_vals: np.ndarray) -> tuple[int, int, int, int]:
    """Tie-group sums: t(t-1)/2, t(t-1)(2t+5), t(t-1), t(t-1)(t-2)."""
    edges = np.flatnonzero(np.diff(sorted_vals)) + 1
    t = np.diff(np.concatenate(([0], edges, [len(sorted_vals)]))).astype(np.int64)
    t = t[t > 1]
    return (
        int((t * (t - 1) // 2).sum()),
        int((t * (t - 1) * (2 * t + 5)).sum()),
        int((t * (t - 1)).sum()),
        int((t * (t - 1) * (t - 2)).sum()),
    )


def _count_inversions(a: np.ndarray) -> int:
    """Pairs i < j with a[i] > a[j], by bottom-up merge sort."""
    a = np.asarray(a).copy()
    n = len(a)
    inv = 0
    width = 1
    while width < n:
        for lo in range(0, n - width, 2 * width):
            mid, hi = lo + width, min(lo + 2 * width, n)
            left, right = a[lo:mid], a[mid:hi]
            # each right element jumps over the left elements strictly greater than it
            inv += int((len(left) - np.searchsorted(left, right, side="right")).sum())
            a[lo:hi] = np.sort(np.concatenate((left, right)), kind="mergesort")
        width *= 2
    return inv


def kendall_tau_b(x, y) -> CorrelationResult:
    """Tie-corrected Kendall tau with a two-sided normal-approximation p-value.

    Runs in O(n log n): sorting by (x, y) leaves the discordant pairs as the
    inversions of y.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if n != len(y):
        raise ValueError("x and y must have equal length")
    if n < 2:
        raise ValueError("need at least two observations")

    order = np.lexsort((y, x))
    xs, ys = x[order], y[order]
    n0 = n * (n - 1) // 2
    n1, vt, t1, t2 = _tie_sums(xs)
    n2, vu, u1, u2 = _tie_sums(np.sort(y))
    if n1 == n0 or n2 == n0:
        raise AllTied("Kendall tau is undefined for a constant input")

    # pairs tied on both variables
    same = np.concatenate(([False], (np.diff(xs) == 0) & (np.diff(ys) == 0)))
    edges = np.flatnonzero(~same)
    runs = np.diff(np.concatenate((edges, [n]))).astype(np.int64)
    n3 = int((runs * (runs - 1) // 2).sum())

    swaps = _count_inversions(ys)
    s = n0 - n1 - n2 + n3 - 2 * swaps
    tau = s / math.sqrt((n0 - n1) * (n0 - n2))
    tau = max(-1.0, min(1.0, tau))

    var = (n * (n - 1) * (2 * n + 5) - vt - vu) / 18.0
    var += t1 * u1 / (2.0 * n * (n - 1))
    if n > 2:
        var += t2 * u2 / (9.0 * n * (n - 1) * (n - 2))
    p = math.erfc(abs(s) / math.sqrt(2.0 * var)) if var > 0 else 1.0
    return CorrelationResult(float(tau), float(min(1.0, p)), n)


@dataclass(frozen=True)
class SelectionRow:
    feature: str
    tau: float
    p_value: float
    selected: bool


def select_features(matrix, labels=None, alpha: float = 0.05):
    """Keep columns whose Kendall correlation with the labels has p < alpha.

    Call this on the training partition only.  Columns that are constant
    (tau undefined) are reported with tau 0 and p 1.
    Returns ``(selected_names, report_rows)``.
    """
    y = matrix.y if labels is None else np.asarray(labels)
    report = []
    for j, name in enumerate(matrix.column_names):
        try:
            r = kendall_tau_b(matrix.X[:, j], y)
            tau, p = r.tau_b, r.p_value
        except AllTied:
            tau, p = 0.0, 1.0
        # alpha >= 1 admits every column, including p == 1
        report.append(SelectionRow(name, tau, p, p < alpha or alpha >= 1.0))
    selected = [r.feature for r in report if r.selected]
    if not selected:
        warnings.warn(f"no feature reached p < {alpha}", EmptySelectionWarning)
    return selected, report


def write_selection_report(report, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature", "tau", "p_value", "selected"])
        for r in report:
            w.writerow([r.feature, repr(r.tau), repr(r.p_value), int(r.selected)])
