"""Local-maximum detection with topographic prominence and interpolated width."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import NotAPeak

# minimum prominence on the normalized [0, 1] scale
MIN_PROMINENCE = {"EDA": 1e-4, "BVP": 1e-3}
REL_HEIGHT = 0.5


@dataclass(frozen=True)
class Peak:
    index: int
    amplitude: float
    prominence: float
    width: float  # samples
    left_base: int
    right_base: int
    width_left: float
    width_right: float


@dataclass(frozen=True)
class PeakSet:
    peaks: tuple[Peak, ...]
    window_fs: float
    window_len: int

    def __len__(self):
        return len(self.peaks)

    @property
    def indices(self) -> np.ndarray:
        return np.array([p.index for p in self.peaks], dtype=int)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([p.amplitude for p in self.peaks], dtype=float)

    @property
    def prominences(self) -> np.ndarray:
        return np.array([p.prominence for p in self.peaks], dtype=float)

    @property
    def widths_s(self) -> np.ndarray:
        return np.array([p.width for p in self.peaks], dtype=float) / self.window_fs

    def to_csv(self, path) -> None:
        """Diagnostic dump: ``index,amplitude,prominence,width_s``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "amplitude", "prominence", "width_s"])
            for p, ws in zip(self.peaks, self.widths_s):
                w.writerow([p.index, repr(p.amplitude), repr(p.prominence), repr(float(ws))])


def find_local_maxima(x) -> np.ndarray:
    """Indices of strict local maxima; plateaus report their midpoint (rounded down).

    Endpoints are never peaks.
    """
    x = np.asarray(x, dtype=float)
    if len(x) < 3:
        return np.empty(0, dtype=int)
    d = np.diff(x)
    # collapse runs of equal samples, keeping the first index of each run
    keep = np.concatenate(([True], d != 0))
    starts = np.flatnonzero(keep)
    ends = np.concatenate((starts[1:], [len(x)])) - 1
    vals = x[starts]
    if len(vals) < 3:
        return np.empty(0, dtype=int)
    is_max = (vals[1:-1] > vals[:-2]) & (vals[1:-1] > vals[2:])
    s, e = starts[1:-1][is_max], ends[1:-1][is_max]
    return (s + e) // 2


def peak_prominence(x, peak_index: int) -> tuple[float, int, int]:
    """Topographic prominence of ``x[peak_index]`` with its left/right bases.

    The search extends from the peak on each side until a strictly higher
    sample or the boundary; each base is the lowest sample in that range
    (closest to the peak on ties).
    """
    x = np.asarray(x, dtype=float)
    i = int(peak_index)
    _check_peak(x, i)
    h = x[i]

    higher = np.flatnonzero(x[:i] > h)
    lo = higher[-1] + 1 if len(higher) else 0
    seg = x[lo : i + 1][::-1]
    left_base = i - int(np.argmin(seg))

    higher = np.flatnonzero(x[i + 1 :] > h)
    hi = i + higher[0] if len(higher) else len(x) - 1
    seg = x[i : hi + 1]
    right_base = i + int(np.argmin(seg))

    prominence = h - max(x[left_base], x[right_base])
    return float(prominence), left_base, right_base


def peak_width(
    x,
    peak_index: int,
    rel_height: float = REL_HEIGHT,
    prominence_data: tuple[float, int, int] | None = None,
) -> tuple[float, float, float]:
    """Width of a peak at ``amplitude - rel_height * prominence``.

    Crossings are linearly interpolated moving outward from the peak and are
    clamped at the prominence bases.  Returns ``(width, left_ip, right_ip)``
    in fractional samples.
    """
    x = np.asarray(x, dtype=float)
    i = int(peak_index)
    if prominence_data is None:
        prominence_data = peak_prominence(x, i)
    else:
        _check_peak(x, i)
    prom, lb, rb = prominence_data
    height = x[i] - rel_height * prom

    below = np.flatnonzero(x[lb:i] <= height)
    j = lb + below[-1] if len(below) else lb
    left = float(j)
    if x[j] < height:
        left += (height - x[j]) / (x[j + 1] - x[j])

    below = np.flatnonzero(x[i + 1 : rb + 1] <= height)
    j = i + 1 + below[0] if len(below) else rb
    right = float(j)
    if x[j] < height:
        right -= (height - x[j]) / (x[j - 1] - x[j])

    return right - left, left, right


def detect_peaks(x, fs: float, min_prominence: float = MIN_PROMINENCE["EDA"],
                 rel_height: float = REL_HEIGHT) -> PeakSet:
    """Every local maximum with prominence above ``min_prominence``."""
    x = np.asarray(x, dtype=float)
    found = []
    for i in find_local_maxima(x):
        prom = peak_prominence(x, i)
        if prom[0] <= min_prominence:
            continue
        width, wl, wr = peak_width(x, i, rel_height, prom)
        found.append(Peak(int(i), float(x[i]), prom[0], width, prom[1], prom[2], wl, wr))
    return PeakSet(tuple(found), float(fs), len(x))


def _check_peak(x: np.ndarray, i: int) -> None:
    if not 0 < i < len(x) - 1:
        raise NotAPeak(f"index {i} is at or beyond the signal boundary")
    h = x[i]
    lo = i
    while lo > 0 and x[lo - 1] == h:
        lo -= 1
    hi = i
    while hi < len(x) - 1 and x[hi + 1] == h:
        hi += 1
    if lo == 0 or hi == len(x) - 1 or x[lo - 1] > h or x[hi + 1] > h:
        raise NotAPeak(f"index {i} is not a local maximum")
