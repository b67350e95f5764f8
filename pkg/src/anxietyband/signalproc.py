"""Min-max normalization and zero-phase Butterworth low-pass filtering.

EDA streams (4 Hz) are low-passed at 1 Hz and BVP streams (64 Hz) at 10 Hz,
both with an order-5 Butterworth design realized by the bilinear transform.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.signal import lfilter, lfilter_zi

from .errors import ConfigError, ConstantSignalWarning, InvalidCutoff, SegmentTooShort
from .protocol import PhaseMark, validate_marks

EDA = "EDA"
BVP = "BVP"
KINDS = (EDA, BVP)

DEFAULT_FS = {EDA: 4.0, BVP: 64.0}
FILTER_ORDER = 5
CUTOFF_HZ = {EDA: 1.0, BVP: 10.0}

CONSTANT_FLAG = "constant_signal"


@dataclass(frozen=True)
class RawSignal:
    samples: np.ndarray
    fs: float
    kind: str
    session_id: str = ""
    phase_marks: tuple[PhaseMark, ...] = ()
    flags: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown signal kind {self.kind!r}")
        if not self.fs > 0:
            raise ConfigError("sampling rate must be positive")
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        object.__setattr__(self, "phase_marks", tuple(self.phase_marks))
        validate_marks(self.phase_marks, len(self.samples))

    def __len__(self):
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.fs


@dataclass(frozen=True)
class FilterSpec:
    order: int
    cutoff_hz: float
    fs: float

    def __post_init__(self):
        if self.order < 1:
            raise ConfigError("filter order must be >= 1")
        if not self.fs > 0:
            raise ConfigError("sampling rate must be positive")
        if not 0 < self.cutoff_hz < self.fs / 2:
            raise InvalidCutoff(
                f"cutoff {self.cutoff_hz} Hz must lie in (0, {self.fs / 2}) for fs={self.fs}"
            )


@dataclass(frozen=True)
class IirCoefficients:
    b: np.ndarray
    a: np.ndarray

    @property
    def order(self) -> int:
        return len(self.a) - 1

    def frequency_response(self, freqs_hz, fs: float) -> np.ndarray:
        """Complex response H(e^{jw}) at the given frequencies."""
        z = np.exp(-2j * np.pi * np.asarray(freqs_hz, dtype=float) / fs)
        # polyval wants highest power first; b/a are in ascending powers of z^-1
        return np.polyval(self.b[::-1], z) / np.polyval(self.a[::-1], z)

    def poles(self) -> np.ndarray:
        return np.roots(self.a)


def filter_spec_for(kind: str, fs: float | None = None) -> FilterSpec:
    fs = DEFAULT_FS[kind] if fs is None else fs
    return FilterSpec(FILTER_ORDER, CUTOFF_HZ[kind], fs)


def normalize_minmax(signal: RawSignal) -> RawSignal:
    """Scale samples to [0, 1].

    A constant signal maps to all zeros, gains the ``constant_signal`` flag
    and emits :class:`ConstantSignalWarning`.
    """
    x = signal.samples
    if x.size == 0:
        raise SegmentTooShort("cannot normalize an empty signal")
    lo, hi = float(x.min()), float(x.max())
    if hi == lo:
        warnings.warn(f"constant {signal.kind} signal {signal.session_id!r}", ConstantSignalWarning)
        return replace(signal, samples=np.zeros_like(x), flags=signal.flags | {CONSTANT_FLAG})
    return replace(signal, samples=scale_minmax(x, lo, hi))


def scale_minmax(x, lo: float, hi: float) -> np.ndarray:
    y = (np.asarray(x, dtype=float) - lo) / (hi - lo)
    # guard the endpoints against rounding so min -> 0 and max -> 1 exactly
    y[x == lo] = 0.0
    y[x == hi] = 1.0
    return y


@lru_cache(maxsize=32)
def design_butterworth_lowpass(spec: FilterSpec) -> IirCoefficients:
    """Digital Butterworth low-pass via analog prototype and bilinear transform.

    The analog cutoff is pre-warped so the digital response is exactly -3 dB
    at ``spec.cutoff_hz``.  All zeros land on z = -1 and the gain is set for
    unity response at DC.
    """
    n, fs = spec.order, spec.fs
    warped = 2.0 * fs * np.tan(np.pi * spec.cutoff_hz / fs)
    k = np.arange(1, n + 1)
    analog_poles = warped * np.exp(1j * np.pi * (2 * k + n - 1) / (2 * n))
    digital_poles = (2.0 * fs + analog_poles) / (2.0 * fs - analog_poles)

    a = np.real(np.poly(digital_poles))
    b = np.real(np.poly(-np.ones(n)))
    b *= a.sum() / b.sum()
    return IirCoefficients(b=b, a=a)


def filter_zero_phase(coeffs: IirCoefficients, x) -> np.ndarray:
    """Forward-backward filtering with odd reflection padding of 3*order samples."""
    x = np.asarray(x, dtype=float)
    pad = 3 * coeffs.order
    if x.ndim != 1 or len(x) <= pad:
        raise SegmentTooShort(f"need more than {pad} samples, got {len(x)}")
    ext = np.concatenate(
        (2 * x[0] - x[pad:0:-1], x, 2 * x[-1] - x[-2 : -pad - 2 : -1])
    )
    zi = lfilter_zi(coeffs.b, coeffs.a)
    y, _ = lfilter(coeffs.b, coeffs.a, ext, zi=zi * ext[0])
    y, _ = lfilter(coeffs.b, coeffs.a, y[::-1], zi=zi * y[-1])
    return y[::-1][pad:-pad]


def preprocess(signal: RawSignal, clip: bool = True) -> RawSignal:
    """Normalize, low-pass (kind-specific cutoff) and clip back to [0, 1]."""
    spec = filter_spec_for(signal.kind, signal.fs)
    normed = normalize_minmax(signal)
    if CONSTANT_FLAG in normed.flags:
        return normed
    return replace(normed, samples=_filter_and_clip(normed.samples, spec, clip))


def preprocess_window(x, kind: str, fs: float, lo: float, hi: float, clip: bool = True) -> np.ndarray:
    """Streaming variant: scale with calibration bounds, then filter one buffer."""
    spec = filter_spec_for(kind, fs)
    if hi == lo:
        return np.zeros(len(x))
    return _filter_and_clip(scale_minmax(np.asarray(x, dtype=float), lo, hi), spec, clip)


def _filter_and_clip(x, spec: FilterSpec, clip: bool) -> np.ndarray:
    y = filter_zero_phase(design_butterworth_lowpass(spec), x)
    if clip:
        np.clip(y, 0.0, 1.0, out=y)
    return y
