"""Emission-frequency extraction and spectra from time traces.

All functions take plain (times, amplitude) arrays in us and sqrt
quanta. Frequencies are reported as ordinary frequencies in MHz
(cycles/us) on an axis where positive means blue-shifted emission: a
rotating amplitude a(t) = a0 exp(-i W t) with W > 0 radiates above the
reference frequency and lands at +W/2pi on this axis.

Two independent estimators are provided for the dominant emission
offset: a weighted linear fit to the unwrapped phase (precise for
single-tone segments, with a residual-based confidence) and the peak
of a Hann-windowed FFT (robust for multi-tone segments, one-bin
resolution). Their agreement on clean segments is a consistency check
used by the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FitError

TWO_PI = 2.0 * math.pi

# Weighted phase-fit mean square residual (rad^2) at which confidence
# drops to 1/2; segments above it are flagged low-confidence.
PHASE_RESIDUAL_SCALE = 1e-2


def _analysis_window(times: np.ndarray, values: np.ndarray,
                     t_drop: float) -> tuple[np.ndarray, np.ndarray]:
    keep = times >= times[0] + t_drop
    return times[keep], values[keep]


def phase_slope_offset(times: np.ndarray, a: np.ndarray, t_drop: float,
                       fit_fraction: float = 0.5,
                       residual_scale: float = PHASE_RESIDUAL_SCALE,
                       ) -> tuple[float, float]:
    """Emission offset (rad/us) from the slope of the unwrapped phase.

    Drops the first ``t_drop`` of the trace as transient, then fits
    the trailing ``fit_fraction`` of what remains with a linear model
    of the unwrapped phase, weighted by instantaneous power so dim
    intervals do not pollute the slope. Returns (omega, confidence);
    the offset follows the blue-positive convention, and confidence is
    1 / (1 + mse/residual_scale), which drops well below 1/2 for
    multi-tone or drifting segments. A window with zero total power
    has no phase to fit and raises FitError.
    """
    if not 0.0 < fit_fraction <= 1.0:
        raise ValueError(f"fit_fraction must be in (0, 1], got {fit_fraction}")
    t, z = _analysis_window(np.asarray(times), np.asarray(a), t_drop)
    start = t.size - int(round(fit_fraction * t.size))
    t, z = t[start:], z[start:]
    if t.size < 8:
        raise ValueError(f"phase fit needs >= 8 samples, got {t.size}")
    w = np.abs(z) ** 2
    w_sum = float(np.sum(w))
    if not (w_sum > 0 and np.isfinite(w_sum)):
        raise FitError("undefined phase: analysis window has zero power")
    phi = np.unwrap(np.angle(z))
    t_bar = float(np.sum(w * t)) / w_sum
    p_bar = float(np.sum(w * phi)) / w_sum
    dt_ = t - t_bar
    var_t = float(np.sum(w * dt_ * dt_))
    if var_t <= 0:
        raise ValueError("degenerate time axis in phase fit")
    slope = float(np.sum(w * dt_ * (phi - p_bar))) / var_t
    resid = phi - p_bar - slope * dt_
    mse = float(np.sum(w * resid * resid)) / w_sum
    confidence = 1.0 / (1.0 + mse / residual_scale)
    return -slope, confidence


def hann_fft(times: np.ndarray, a: np.ndarray, t_drop: float = 0.0,
             normalize: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Hann-windowed magnitude spectrum of a complex trace.

    Returns (freqs, mags) with freqs in MHz, ascending, on the
    blue-positive emission axis (see module docstring). With
    ``normalize`` the magnitudes are scaled to unit maximum;
    otherwise they are raw windowed-FFT magnitudes, which satisfy the
    usual Parseval identity against the windowed samples.
    """
    t, z = _analysis_window(np.asarray(times), np.asarray(a), t_drop)
    if t.size < 8:
        raise ValueError(f"FFT needs >= 8 samples, got {t.size}")
    dt = float(t[1] - t[0])
    win = np.hanning(t.size)
    spec = np.fft.fftshift(np.fft.fft(win * z))
    freqs = np.fft.fftshift(np.fft.fftfreq(t.size, d=dt))
    # exp(-i W t) peaks at -W/(2 pi) in FFT convention; flip the axis
    # so blue shifts (W > 0) appear at positive frequencies.
    freqs = -freqs[::-1]
    mags = np.abs(spec)[::-1]
    if normalize:
        peak = float(np.max(mags))
        if peak > 0:
            mags = mags / peak
    return freqs, mags


def fft_peak_offset(times: np.ndarray, a: np.ndarray,
                    t_drop: float = 0.0) -> tuple[float, float]:
    """Dominant emission offset (rad/us) from the Hann FFT peak bin.

    Returns (omega, bin_width_rad_per_us); the estimate is quantized
    to the bin grid, so agreement with the phase-slope route is only
    expected to one bin.
    """
    freqs, mags = hann_fft(times, a, t_drop, normalize=False)
    i = int(np.argmax(mags))
    bin_w = float(freqs[1] - freqs[0])
    return TWO_PI * float(freqs[i]), TWO_PI * bin_w


@dataclass
class Spectrogram:
    """Stacked per-segment spectra over a swept control parameter.

    ``magnitudes[i, j]`` is the spectral magnitude at ``freqs[i]``
    (MHz) for sweep column j (nominal detuning ``detunings[j]``,
    rad/us), normalized to unit maximum within each column. ``floor``
    is the clip applied by ``log10`` so empty bins render at a finite
    dB level.
    """

    freqs: np.ndarray
    detunings: np.ndarray
    magnitudes: np.ndarray
    floor: float = 1e-6

    def log10(self) -> np.ndarray:
        """Log-magnitude view, clipped at ``floor``."""
        return np.log10(np.maximum(self.magnitudes, self.floor))


def build_spectrogram(segments, detunings, t_drop: float,
                      f_min: float | None = None,
                      f_max: float | None = None,
                      floor: float = 1e-6) -> Spectrogram:
    """Hann spectra of many segments stacked into one matrix.

    ``segments`` is an iterable of objects with ``times`` and ``a``
    arrays (one per sweep step, equal length and spacing). The
    frequency axis can be cropped to [f_min, f_max] MHz. Columns are
    normalized to unit maximum independently, matching how swept
    emission spectra are usually displayed.
    """
    segs = list(segments)
    detunings = np.asarray(detunings, dtype=float)
    if len(segs) == 0:
        raise ValueError("no segments to stack")
    if detunings.size != len(segs):
        raise ValueError(f"{len(segs)} segments but {detunings.size} "
                         "detunings")
    freqs_ref: np.ndarray | None = None
    cols = []
    for seg in segs:
        freqs, mags = hann_fft(seg.times, seg.a, t_drop, normalize=False)
        if freqs_ref is None:
            sel = np.ones(freqs.size, dtype=bool)
            if f_min is not None:
                sel &= freqs >= f_min
            if f_max is not None:
                sel &= freqs <= f_max
            if not np.any(sel):
                raise ValueError("frequency crop leaves no bins")
            freqs_ref = freqs[sel]
        elif freqs.size != sel.size:
            raise ValueError("segments have mismatched sample counts")
        col = mags[sel]
        peak = float(np.max(col))
        if peak > 0:
            col = col / peak
        cols.append(col)
    return Spectrogram(freqs=freqs_ref, detunings=detunings,
                       magnitudes=np.column_stack(cols), floor=floor)
