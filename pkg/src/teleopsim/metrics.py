"""Offline motion-quality pipeline.

Velocity is derived from 500 Hz position logs by central differences,
low-pass filtered with a first-order Butterworth (zero-phase,
forward-backward), and scored with the spectral arc length smoothness
metric on the speed magnitude. Outliers are screened with asymmetric-safe
quartile fences at k*IQR (k = 2.0 keeps skewed distributions from being
over-trimmed).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import filtfilt


@dataclass(frozen=True)
class SparcParams:
    """Spectral arc length parameters.

    ``pad_level`` follows the metric's reference convention: the FFT is
    zero-padded to 2**(ceil(log2(n)) + pad_level), i.e. at least 16x the
    signal length at the default. Coarser padding biases the adaptive
    cutoff onto the frequency grid and shifts the value noticeably.
    """

    w_max: float = 20.0        # Hz, hard cutoff of the evaluated band
    v_bar: float = 0.05        # normalized amplitude threshold
    pad_level: int = 4         # extra powers of two of zero padding

    def __post_init__(self) -> None:
        if self.w_max <= 0:
            raise ValueError("w_max must be positive")
        if not 0.0 < self.v_bar < 1.0:
            raise ValueError("v_bar must lie in (0, 1)")
        if self.pad_level < 0:
            raise ValueError("pad_level must be >= 0")


class MetricError(ValueError):
    """Metric undefined for the given input."""


def butterworth_coefficients(fc: float, fs: float) -> tuple[np.ndarray, np.ndarray]:
    """First-order low-pass coefficients via bilinear transform with
    prewarping: returns (b, a) with b = [k, k]/(1+k), a = [1, (k-1)/(1+k)]
    for k = tan(pi*fc/fs)."""
    if not 0.0 < fc < fs / 2.0:
        raise ValueError("cutoff must lie in (0, fs/2)")
    k = math.tan(math.pi * fc / fs)
    b = np.array([k / (1.0 + k), k / (1.0 + k)])
    a = np.array([1.0, (k - 1.0) / (1.0 + k)])
    return b, a


def lowpass(signal, fc: float = 20.0, fs: float = 500.0) -> np.ndarray:
    """Zero-phase first-order Butterworth low-pass (forward-backward)."""
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1:
        raise ValueError("expected a 1-D signal")
    b, a = butterworth_coefficients(fc, fs)
    return filtfilt(b, a, x)


def speed_profile(positions, fs: float = 500.0, fc: float = 20.0) -> np.ndarray:
    """Speed magnitude from an (n, 3) position series.

    Central differences (one-sided at the ends) per axis, each axis
    low-pass filtered, then the Euclidean norm per sample.
    """
    pos = np.asarray(positions, dtype=float)
    if pos.ndim != 2 or pos.shape[1] != 3:
        raise ValueError("expected an (n, 3) position series")
    if len(pos) < 3:
        raise MetricError("need at least 3 samples to differentiate")
    vel = np.gradient(pos, 1.0 / fs, axis=0)
    for axis in range(3):
        vel[:, axis] = lowpass(vel[:, axis], fc, fs)
    return np.linalg.norm(vel, axis=1)


def sparc(speeds, fs: float = 500.0, params: SparcParams = SparcParams()) -> float:
    """Spectral arc length of a speed profile (negative; closer to zero is
    smoother).

    The magnitude spectrum of the zero-padded profile is normalized by its
    DC value; the evaluated band ends at ``w_max`` or at the last frequency
    whose normalized magnitude still reaches ``v_bar``, whichever is
    smaller; the arc length accumulates sqrt((df/f_band)^2 + dV^2) over
    the discrete spectrum.
    """
    v = np.asarray(speeds, dtype=float)
    if v.ndim != 1 or len(v) == 0:
        raise MetricError("empty speed profile")
    if not np.any(v != 0.0):
        raise MetricError("all-zero speed profile")
    n = len(v)
    nfft = 1 << (int(np.ceil(np.log2(n))) + params.pad_level)
    spectrum = np.abs(np.fft.rfft(v, nfft))
    freqs = np.fft.rfftfreq(nfft, 1.0 / fs)
    vhat = spectrum / spectrum[0]

    within = freqs <= params.w_max
    freqs = freqs[within]
    vhat = vhat[within]
    above = np.nonzero(vhat >= params.v_bar)[0]
    # band from DC to the last threshold crossing (dips in between stay in)
    last = above[-1] if len(above) else 0
    freqs = freqs[: last + 1]
    vhat = vhat[: last + 1]
    band = freqs[-1] - freqs[0]
    if band <= 0.0:
        raise MetricError("spectral band collapsed")
    df = np.diff(freqs) / band
    dv = np.diff(vhat)
    return -float(np.sum(np.sqrt(df * df + dv * dv)))


def completion_time(shown_at: float | None, confirmed_at: float | None) -> float | None:
    """Target shown to pose confirmed, hold included; None if unconfirmed."""
    if shown_at is None or confirmed_at is None:
        return None
    return confirmed_at - shown_at


@dataclass(frozen=True)
class OutlierReport:
    original_n: int
    removed_n: int
    pct_removed: float
    mean_before: float
    mean_after: float
    sd_before: float
    sd_after: float
    lower_fence: float
    upper_fence: float


def remove_outliers(values, k: float = 2.0):
    """Single-pass quartile-fence screening.

    Quartiles use linear interpolation (numpy default, the "type 7"
    convention); values outside [Q1 - k*IQR, Q3 + k*IQR] are removed.
    Fewer than 4 values are never trimmed. Returns (kept, removed, report)
    with input order preserved.
    """
    vals = [float(x) for x in values]
    if not vals:
        raise MetricError("empty input")
    arr = np.asarray(vals)
    if len(arr) < 4:
        kept, removed = vals, []
        lo, hi = -math.inf, math.inf
    else:
        q1, q3 = np.percentile(arr, [25.0, 75.0])
        iqr = q3 - q1
        lo = q1 - k * iqr
        hi = q3 + k * iqr
        kept = [x for x in vals if lo <= x <= hi]
        removed = [x for x in vals if not lo <= x <= hi]
    kept_arr = np.asarray(kept)
    report = OutlierReport(
        original_n=len(vals),
        removed_n=len(removed),
        pct_removed=100.0 * len(removed) / len(vals),
        mean_before=float(arr.mean()),
        mean_after=float(kept_arr.mean()) if len(kept) else math.nan,
        sd_before=float(arr.std(ddof=1)) if len(vals) > 1 else 0.0,
        sd_after=float(kept_arr.std(ddof=1)) if len(kept) > 1 else 0.0,
        lower_fence=lo,
        upper_fence=hi,
    )
    return kept, removed, report
