import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import signal as sps

from anxietyband.errors import ConstantSignalWarning, InvalidCutoff, SegmentTooShort
from anxietyband.protocol import PhaseMark
from anxietyband.signalproc import (
    BVP,
    CONSTANT_FLAG,
    EDA,
    FilterSpec,
    RawSignal,
    design_butterworth_lowpass,
    filter_spec_for,
    filter_zero_phase,
    normalize_minmax,
    preprocess,
    preprocess_window,
)
from oracles import magnitude_response

DEVICE_CONFIGS = [(1.0, 4.0), (10.0, 64.0)]


def _amp(y):
    return (y.max() - y.min()) / 2


# -- normalization -------------------------------------------------------------

def test_minmax_small_example():
    out = normalize_minmax(RawSignal([1.0, 3.0, 2.0], 4.0, EDA))
    assert out.samples.tolist() == [0.0, 1.0, 0.5]


def test_constant_signal_flags_and_zeros():
    with pytest.warns(ConstantSignalWarning):
        out = normalize_minmax(RawSignal([5.0, 5.0, 5.0], 4.0, EDA))
    assert out.samples.tolist() == [0.0, 0.0, 0.0]
    assert CONSTANT_FLAG in out.flags


@given(arrays(np.float64, st.integers(2, 100),
              elements=st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)))
def test_minmax_hits_endpoints_exactly(x):
    if x.min() == x.max():
        return
    y = normalize_minmax(RawSignal(x, 4.0, EDA)).samples
    assert y.min() == 0.0 and y.max() == 1.0
    assert np.all((y >= 0) & (y <= 1))


def test_empty_signal_rejected():
    with pytest.raises(SegmentTooShort):
        normalize_minmax(RawSignal([], 4.0, EDA))


# -- filter design --------------------------------------------------------------

@pytest.mark.parametrize("fc,fs", DEVICE_CONFIGS)
def test_design_matches_reference_butterworth(fc, fs):
    c = design_butterworth_lowpass(FilterSpec(5, fc, fs))
    b_ref, a_ref = sps.butter(5, fc, fs=fs)
    np.testing.assert_allclose(c.b, b_ref, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(c.a, a_ref, rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("fc,fs", DEVICE_CONFIGS)
def test_unity_dc_and_half_power_at_cutoff(fc, fs):
    c = design_butterworth_lowpass(FilterSpec(5, fc, fs))
    h = np.abs(c.frequency_response([0.0, fc], fs))
    assert abs(h[0] - 1.0) < 1e-9
    assert abs(h[1] - 1 / np.sqrt(2)) < 1e-6
    # direct summation agrees with the polynomial evaluation
    np.testing.assert_allclose(magnitude_response(c.b, c.a, [0.0, fc], fs), h, atol=1e-12)


@pytest.mark.parametrize("fc,fs", DEVICE_CONFIGS)
def test_magnitude_monotone_over_sweep(fc, fs):
    c = design_butterworth_lowpass(FilterSpec(5, fc, fs))
    f = np.linspace(0.0, fs / 2, 1000)
    h = np.abs(c.frequency_response(f, fs))
    # near DC the response is 1 - O(f^10), flat to double precision
    assert np.all(np.diff(h) <= 1e-12)
    assert np.all(np.diff(h[f > fc / 4]) < 0)
    # closed form of the bilinear-transformed Butterworth, strictly decreasing in f
    ratio = np.tan(np.pi * f / fs) / np.tan(np.pi * fc / fs)
    np.testing.assert_allclose(h, 1 / np.sqrt(1 + ratio ** 10), atol=1e-9)


@pytest.mark.parametrize("fc,fs", DEVICE_CONFIGS)
def test_poles_inside_unit_circle(fc, fs):
    c = design_butterworth_lowpass(FilterSpec(5, fc, fs))
    assert c.order == 5
    assert np.all(np.abs(c.poles()) < 1)


@pytest.mark.parametrize("fc", [0.0, 2.0, 3.0, -1.0])
def test_cutoff_at_or_above_nyquist_rejected(fc):
    with pytest.raises(InvalidCutoff):
        FilterSpec(5, fc, 4.0)


def test_kind_defaults():
    assert filter_spec_for(EDA) == FilterSpec(5, 1.0, 4.0)
    assert filter_spec_for(BVP) == FilterSpec(5, 10.0, 64.0)


# -- zero-phase filtering --------------------------------------------------------

def test_matches_reference_forward_backward(rng):
    c = design_butterworth_lowpass(filter_spec_for(EDA))
    x = rng.normal(size=400)
    ref = sps.filtfilt(c.b, c.a, x, padtype="odd", padlen=15)
    np.testing.assert_allclose(filter_zero_phase(c, x), ref, atol=1e-12)


def test_constant_in_constant_out():
    c = design_butterworth_lowpass(filter_spec_for(EDA))
    np.testing.assert_allclose(filter_zero_phase(c, np.full(100, 0.37)), 0.37, atol=1e-12)


def test_passband_sinusoid_preserved():
    fs = 4.0
    t = np.arange(0, 200, 1 / fs)
    y = filter_zero_phase(design_butterworth_lowpass(filter_spec_for(EDA)), np.sin(2 * np.pi * 0.1 * t))
    mid = y[len(y) // 4: -len(y) // 4]
    assert abs(_amp(mid) - 1.0) < 0.02


def test_stopband_sinusoid_attenuated():
    fs = 4.0
    t = np.arange(0, 200, 1 / fs)
    y = filter_zero_phase(design_butterworth_lowpass(filter_spec_for(EDA)), np.sin(2 * np.pi * 1.8 * t))
    mid = y[len(y) // 4: -len(y) // 4]
    assert _amp(mid) < 0.05


def test_tone_over_ramp_loses_20db():
    fs = 4.0
    t = np.arange(0, 300, 1 / fs)
    ramp = 0.01 * t
    tone = 0.5 * np.sin(2 * np.pi * 1.9 * t)
    y = preprocess(RawSignal(ramp + tone, fs, EDA)).samples
    x = normalize_minmax(RawSignal(ramp + tone, fs, EDA)).samples

    def tone_power(v):
        spec = np.abs(np.fft.rfft(v - np.polyval(np.polyfit(t, v, 1), t))) ** 2
        f = np.fft.rfftfreq(len(v), 1 / fs)
        return spec[np.abs(f - 1.9) < 0.05].sum()

    assert 10 * np.log10(tone_power(x) / tone_power(y)) >= 20


def test_too_short_segment_rejected():
    c = design_butterworth_lowpass(filter_spec_for(EDA))
    with pytest.raises(SegmentTooShort):
        filter_zero_phase(c, np.zeros(15))
    filter_zero_phase(c, np.zeros(16))


# -- preprocess ------------------------------------------------------------------

def test_preprocess_keeps_length_and_unit_range(rng):
    x = np.cumsum(rng.normal(size=720))
    marks = (PhaseMark("pre_stress", 0, 720),)
    out = preprocess(RawSignal(x, 4.0, EDA, "s", marks))
    assert len(out) == 720
    assert out.samples.min() >= 0 and out.samples.max() <= 1
    assert out.phase_marks == marks


def test_unclipped_overshoot_is_small(rng):
    x = np.cumsum(rng.normal(size=720))
    out = preprocess(RawSignal(x, 4.0, EDA), clip=False).samples
    assert out.min() > -0.1 and out.max() < 1.1


def test_constant_bvp_gives_zeros_and_flag():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConstantSignalWarning)
        out = preprocess(RawSignal(np.full(640, 3.0), 64.0, BVP))
    assert not out.samples.any()
    assert CONSTANT_FLAG in out.flags


def test_streaming_window_matches_batch_with_same_bounds(rng):
    x = np.cumsum(rng.normal(size=2000))
    lo, hi = x.min(), x.max()
    batch = preprocess(RawSignal(x, 4.0, EDA)).samples
    win = preprocess_window(x, EDA, 4.0, lo, hi)
    np.testing.assert_allclose(win, batch, atol=1e-12)
    assert not preprocess_window(x, EDA, 4.0, 1.0, 1.0).any()
