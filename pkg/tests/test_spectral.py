"""Phase-slope and FFT frequency extraction on synthetic traces."""

from types import SimpleNamespace

import numpy as np
import pytest

from magpol.errors import FitError
from magpol.model import TWO_PI
from magpol.spectral import (Spectrogram, build_spectrogram, fft_peak_offset,
                             hann_fft, phase_slope_offset)


def _tone(times, f_mhz, amp=1.0, phase=0.0):
    # blue-positive convention: an emission offset W > 0 is exp(-i W t)
    return amp * np.exp(-1j * (TWO_PI * f_mhz * times + phase))


TIMES = np.arange(0.0, 2.0, 1e-3)


def test_pure_tone_slope_is_exact():
    w0 = TWO_PI * 10.0
    omega, conf = phase_slope_offset(TIMES, _tone(TIMES, 10.0), t_drop=0.0)
    assert omega == pytest.approx(w0, rel=1e-9)
    assert conf > 0.999


def test_negative_tone_and_constant_trace():
    omega, conf = phase_slope_offset(TIMES, _tone(TIMES, -7.5), t_drop=0.0)
    assert omega == pytest.approx(-TWO_PI * 7.5, rel=1e-9)
    assert conf > 0.999

    omega, conf = phase_slope_offset(TIMES, np.full(TIMES.size, 3.0 + 0j),
                                     t_drop=0.0)
    assert omega == pytest.approx(0.0, abs=1e-12)
    assert conf > 0.999


def test_zero_power_window_raises_fit_error():
    with pytest.raises(FitError, match="zero power"):
        phase_slope_offset(TIMES, np.zeros(TIMES.size, complex), t_drop=0.0)


def test_window_validation():
    with pytest.raises(ValueError, match=">= 8 samples"):
        phase_slope_offset(TIMES[:6], _tone(TIMES[:6], 5.0), t_drop=0.0)
    with pytest.raises(ValueError, match=">= 8 samples"):
        # t_drop leaves too little
        phase_slope_offset(TIMES, _tone(TIMES, 5.0), t_drop=1.999)
    for bad in (0.0, -0.5, 1.5):
        with pytest.raises(ValueError, match="fit_fraction"):
            phase_slope_offset(TIMES, _tone(TIMES, 5.0), t_drop=0.0,
                               fit_fraction=bad)


def test_two_tone_confidence_collapses():
    """Equal-amplitude beating has no single phase slope; the
    confidence must make that unmissable."""
    _, conf_one = phase_slope_offset(TIMES, _tone(TIMES, 10.0), t_drop=0.0)
    z = _tone(TIMES, 10.0, amp=0.5) + _tone(TIMES, 23.0, amp=0.5)
    _, conf_two = phase_slope_offset(TIMES, z, t_drop=0.0)
    assert conf_two < conf_one / 10.0
    assert conf_two < 0.5


def test_trailing_fraction_fits_the_late_tone():
    z = np.where(TIMES < 1.0, _tone(TIMES, 5.0), _tone(TIMES, 30.0))
    omega, _ = phase_slope_offset(TIMES, z, t_drop=0.0, fit_fraction=0.4)
    assert omega == pytest.approx(TWO_PI * 30.0, rel=1e-9)


def test_hann_fft_bin_centered_tone():
    n, dt = 2000, 1e-3
    times = np.arange(n) * dt
    f0 = 50 / (n * dt)  # exactly on a bin: 25 MHz
    freqs, mags = hann_fft(times, _tone(times, f0))
    i = int(np.argmax(mags))
    assert freqs[i] == pytest.approx(f0, abs=1e-12)
    assert mags[i] == 1.0
    far = np.abs(np.arange(mags.size) - i) > 2
    # Hann sidelobes sit below -31 dB; a bin-centered tone leaks far less
    assert np.max(mags[far]) < 10 ** (-31.0 / 20.0)


def test_hann_fft_sign_convention_is_blue_positive():
    freqs, mags = hann_fft(TIMES, _tone(TIMES, 25.0))
    assert freqs[int(np.argmax(mags))] > 24.0
    freqs, mags = hann_fft(TIMES, _tone(TIMES, -25.0))
    assert freqs[int(np.argmax(mags))] < -24.0
    # constant trace peaks at zero offset
    freqs, mags = hann_fft(TIMES, np.ones(TIMES.size, complex))
    assert abs(freqs[int(np.argmax(mags))]) < 0.5 / (TIMES[-1] - TIMES[0])


def test_hann_fft_axis_and_parseval():
    freqs, mags = hann_fft(TIMES, _tone(TIMES, 3.0), normalize=False)
    assert freqs.size == mags.size == TIMES.size
    assert np.all(np.diff(freqs) > 0)
    win = np.hanning(TIMES.size)
    z = _tone(TIMES, 3.0)
    lhs = np.sum(np.abs(win * z) ** 2)
    rhs = np.sum(mags ** 2) / TIMES.size
    assert lhs == pytest.approx(rhs, rel=1e-9)
    with pytest.raises(ValueError, match=">= 8 samples"):
        hann_fft(TIMES[:5], z[:5])


def test_fft_peak_quantization_and_slope_agreement():
    z = _tone(TIMES, 25.37)  # deliberately off-bin
    omega_fft, bin_w = fft_peak_offset(TIMES, z)
    assert bin_w == pytest.approx(TWO_PI / (TIMES.size * 1e-3), rel=1e-9)
    assert abs(omega_fft - TWO_PI * 25.37) < bin_w
    omega_slope, _ = phase_slope_offset(TIMES, z, t_drop=0.0)
    assert abs(omega_slope - omega_fft) < bin_w


def test_sideband_comb_peak_spacing():
    spacing = 13.0
    z = (_tone(TIMES, 20.0) + _tone(TIMES, 20.0 + spacing, amp=0.5)
         + _tone(TIMES, 20.0 - spacing, amp=0.5))
    freqs, mags = hann_fft(TIMES, z)
    bin_w = freqs[1] - freqs[0]
    # local maxima above the leakage floor
    peaks = [i for i in range(1, mags.size - 1)
             if mags[i] > mags[i - 1] and mags[i] > mags[i + 1]
             and mags[i] > 0.05]
    assert len(peaks) == 3
    gaps = np.diff(freqs[peaks])
    assert np.all(np.abs(gaps - spacing) <= bin_w)


def _segments(tones_mhz, n=1000, dt=1e-3):
    times = np.arange(n) * dt
    return [SimpleNamespace(times=times, a=_tone(times, f)) for f in tones_mhz]


def test_spectrogram_ridge_tracks_the_tone():
    tones = np.linspace(-20.0, 20.0, 9)
    dets = TWO_PI * np.linspace(-50.0, -10.0, 9)
    spg = build_spectrogram(_segments(tones), dets, t_drop=0.0)
    assert spg.magnitudes.shape == (spg.freqs.size, 9)
    bin_w = spg.freqs[1] - spg.freqs[0]
    ridge = spg.freqs[np.argmax(spg.magnitudes, axis=0)]
    assert np.all(np.abs(ridge - tones) <= bin_w)
    # per-column unit max
    assert np.allclose(spg.magnitudes.max(axis=0), 1.0)
    np.testing.assert_array_equal(spg.detunings, dets)


def test_spectrogram_crop_and_log_floor():
    tones = [5.0, 10.0, 15.0]
    dets = TWO_PI * np.array([-1.0, 0.0, 1.0])
    spg = build_spectrogram(_segments(tones), dets, t_drop=0.0,
                            f_min=-30.0, f_max=30.0, floor=1e-6)
    assert spg.freqs.min() >= -30.0 and spg.freqs.max() <= 30.0
    logm = spg.log10()
    assert logm.min() >= np.log10(1e-6) - 1e-12
    assert logm.max() == pytest.approx(0.0, abs=1e-12)


def test_spectrogram_input_validation():
    with pytest.raises(ValueError, match="no segments"):
        build_spectrogram([], np.array([]), t_drop=0.0)
    segs = _segments([5.0, 10.0])
    with pytest.raises(ValueError, match="detunings"):
        build_spectrogram(segs, TWO_PI * np.array([-1.0]), t_drop=0.0)
    ragged = _segments([5.0]) + _segments([10.0], n=500)
    with pytest.raises(ValueError, match="mismatched sample counts"):
        build_spectrogram(ragged, TWO_PI * np.array([-1.0, 1.0]), t_drop=0.0)
    with pytest.raises(ValueError, match="crop leaves no bins"):
        build_spectrogram(segs, TWO_PI * np.array([-1.0, 1.0]), t_drop=0.0,
                          f_min=1e4, f_max=2e4)


def test_spectrogram_dataclass_roundtrip():
    spg = Spectrogram(freqs=np.array([-1.0, 0.0, 1.0]),
                      detunings=np.array([0.0]),
                      magnitudes=np.array([[0.0], [1.0], [0.5]]),
                      floor=1e-4)
    logm = spg.log10()
    assert logm[0, 0] == pytest.approx(-4.0)
    assert logm[1, 0] == pytest.approx(0.0)
