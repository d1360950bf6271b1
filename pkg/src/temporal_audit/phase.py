"""Least-squares phase/amplitude estimation and composite reconstruction.

Each significant frequency is fit independently with a cosine-sine model on
the mean-centered series; the composite signal is the sum of the fitted
cosines, x(t) = sum A_j cos(2 pi f_j t + phi_j) with phases in degrees.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .validation import as_1d_float_array, check_positive


@dataclass(frozen=True)
class PhaseFit:
    """Cosine-reference fit at one frequency: x ~ amplitude*cos(2 pi f t + phase).

    a and b are the cosine and sine coefficients of the equivalent
    a*cos + b*sin form, so a = amplitude*cos(phase), b = -amplitude*sin(phase).
    """

    freq: float
    a: float
    b: float
    amplitude: float
    phase_deg: float

    @classmethod
    def from_coefficients(cls, freq: float, a: float, b: float) -> "PhaseFit":
        amplitude = math.hypot(a, b)
        phase = math.degrees(math.atan2(-b, a))
        if phase <= -180.0:  # atan2 edge: map -180 onto +180
            phase += 360.0
        return cls(freq=freq, a=a, b=b, amplitude=amplitude, phase_deg=phase)


def fit_phase(y, fs: float, freq: float) -> PhaseFit:
    """Least-squares fit of c0 + a*cos(2 pi f t) + b*sin(2 pi f t), t in days
    from the series start; the intercept absorbs the mean and is discarded.

    Fitting the intercept jointly (rather than pre-centering) keeps the
    recovery exact even when the window does not span an integer number of
    cycles, where a pure cosine has a nonzero sample mean.
    """
    y = as_1d_float_array(y, "y", min_len=4)
    fs = check_positive(fs, "fs")
    freq = float(freq)
    if not 0.0 < freq < fs / 2.0:
        raise ValueError(
            f"freq must lie strictly between 0 and the Nyquist rate {fs / 2}"
        )

    t = np.arange(y.size) / fs
    c = np.cos(2.0 * np.pi * freq * t)
    s = np.sin(2.0 * np.pi * freq * t)
    design = np.column_stack([np.ones(y.size), c, s])
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < 3:
        raise ValueError(f"design matrix is singular at freq {freq}")
    return PhaseFit.from_coefficients(freq, float(coef[1]), float(coef[2]))


def reconstruct(
    fits: Sequence[PhaseFit],
    horizon: float = 700.0,
    resolution: float = 96.0,
) -> tuple[np.ndarray, float]:
    """Sum the fitted cosines on a grid of ``resolution`` samples per day over
    ``horizon`` days; returns (series, peak_to_peak range over the horizon).

    The horizon must dwarf the slowest component so the range approaches its
    asymptotic value. A resolution below 4x the fastest component still
    evaluates, with a warning: the sampled range is then grid-limited (this
    matches evaluating the composite on the original slot grid).
    """
    if not fits:
        raise ValueError("need at least one fitted component")
    horizon = check_positive(horizon, "horizon")
    resolution = check_positive(resolution, "resolution")

    max_freq = max(f.freq for f in fits)
    min_freq = min(f.freq for f in fits)
    if min_freq > 0 and horizon < 10.0 / min_freq:
        raise ValueError(
            f"horizon {horizon} d is under 10 periods of the slowest "
            f"component ({1.0 / min_freq:.1f} d)"
        )
    if resolution < 4.0 * max_freq:
        warnings.warn(
            f"resolution {resolution}/day undersamples the fastest component "
            f"({max_freq}/day); the range is grid-limited",
            stacklevel=2,
        )

    n = max(1, int(round(horizon * resolution)))
    t = np.arange(n) / resolution
    series = np.zeros(n)
    for fit in fits:
        series += fit.amplitude * np.cos(
            2.0 * np.pi * fit.freq * t + math.radians(fit.phase_deg)
        )
    return series, float(np.ptp(series))
