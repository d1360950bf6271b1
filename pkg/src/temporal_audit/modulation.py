"""Multiplicative daily-by-weekly modulation model and synthetic generators.

A daily rhythm at f_d whose strength varies across the week at f_w puts
spectral lines at the combination frequencies f = k*f_d +/- m*f_w. When the
weekly envelope has zero mean the carrier line at k*f_d vanishes and only
the sidebands remain (suppressed carrier). Frequencies are kept as exact
rationals so predicted periods like 21 h and 28 h come out exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from fractions import Fraction
from typing import Sequence

import numpy as np

from .spectral import PeakInfo
from .series import EvenSeries, TimePoint
from .validation import check_non_negative, check_positive, check_seed

# fixed start for synthetic logs (a Monday, so week phase starts at zero)
SIMULATION_EPOCH = datetime(2025, 1, 6, 0, 0, tzinfo=timezone.utc)


def _as_fraction(value, name: str) -> Fraction:
    if isinstance(value, float):
        # floats arrive from CLI/JSON; snap to a nearby simple rational
        return Fraction(value).limit_denominator(1_000_000)
    try:
        return Fraction(value)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{name} must be rational, got {value!r}") from exc


@dataclass(frozen=True)
class ModulationModel:
    """Carrier/modulation frequencies (cycles per day) and search ranges."""

    f_d: Fraction = Fraction(1)
    f_w: Fraction = Fraction(1, 7)
    k_max: int = 3
    m_max: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "f_d", _as_fraction(self.f_d, "f_d"))
        object.__setattr__(self, "f_w", _as_fraction(self.f_w, "f_w"))
        if not self.f_d > self.f_w > 0:
            raise ValueError("need f_d > f_w > 0")
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")
        if self.m_max < 0:
            raise ValueError("m_max must be non-negative")


@dataclass(frozen=True)
class SpectralLine:
    """One predicted line: freq = k*f_d + sign*m*f_w (sign is +1 or -1)."""

    k: int
    m: int
    sign: int
    freq: Fraction

    @property
    def period_hours(self) -> Fraction:
        return 24 / self.freq

    @property
    def label(self) -> str:
        if self.k == 0:
            return "weekly_fundamental" if self.m == 1 else "weekly_harmonic"
        if self.m == 0:
            return "daily_fundamental" if self.k == 1 else "daily_harmonic"
        return "sideband"


@dataclass(frozen=True)
class PeakClassification:
    peak: PeakInfo
    label: str
    line: SpectralLine | None = None
    predicted_freq: float | None = None
    deviation: float | None = None


def predict_frequencies(model: ModulationModel) -> list[SpectralLine]:
    """All distinct positive combination frequencies k*f_d +/- m*f_w for
    0 <= k <= k_max, 0 <= m <= m_max, (k, m) != (0, 0), sorted by frequency.

    When two (k, m, sign) combinations land on the same frequency, the
    parsimonious one is kept: lower k+m, then lower k, then the + sign.
    """
    lines: dict[Fraction, SpectralLine] = {}
    candidates: list[SpectralLine] = []
    for k in range(model.k_max + 1):
        for m in range(model.m_max + 1):
            if k == 0 and m == 0:
                continue
            signs = (1,) if (m == 0 or k == 0) else (1, -1)
            for sign in signs:
                freq = k * model.f_d + sign * m * model.f_w
                if freq <= 0:
                    continue
                candidates.append(SpectralLine(k=k, m=m, sign=sign, freq=freq))

    def preference(line: SpectralLine):
        return (line.k + line.m, line.k, 0 if line.sign > 0 else 1)

    for line in sorted(candidates, key=preference):
        lines.setdefault(line.freq, line)
    return sorted(lines.values(), key=lambda l: l.freq)


def classify_peaks(
    peaks: Sequence[PeakInfo],
    model: ModulationModel | None = None,
    tolerance: float | None = None,
) -> list[PeakClassification]:
    """Match each peak to the nearest predicted line within ``tolerance``
    (cycles/day); peaks with no line in range are labeled unexplained.

    Ties on distance prefer lower k+m, then lower k, then the upper sideband.
    """
    model = model or ModulationModel()
    if tolerance is None:
        raise ValueError("tolerance is required (use the spectrum's df)")
    tolerance = check_positive(tolerance, "tolerance")

    lines = predict_frequencies(model)
    out: list[PeakClassification] = []
    for peak in peaks:
        best: tuple | None = None
        for line in lines:
            dev = abs(peak.freq - float(line.freq))
            if dev > tolerance:
                continue
            key = (dev, line.k + line.m, line.k, 0 if line.sign > 0 else 1)
            if best is None or key < best[0]:
                best = (key, line, dev)
        if best is None:
            out.append(PeakClassification(peak=peak, label="unexplained"))
        else:
            _, line, dev = best
            out.append(
                PeakClassification(
                    peak=peak,
                    label=line.label,
                    line=line,
                    predicted_freq=float(line.freq),
                    deviation=dev,
                )
            )
    return out


def _series_from_values(values: np.ndarray, fs: float) -> EvenSeries:
    dt = timedelta(seconds=86400.0 / fs)
    points = tuple(
        TimePoint(replicate_scores=(float(v),)) for v in values
    )
    return EvenSeries(t0=SIMULATION_EPOCH, dt=dt, points=points)


def synth_sines(
    components: Sequence[tuple[float, float, float]],
    fs: float,
    duration: float,
    noise_sd: float = 0.0,
    seed: int = 0,
) -> EvenSeries:
    """Sum of sinusoids x(t) = sum A_i sin(2 pi f_i t + phi_i) plus white
    Gaussian noise, one replicate per slot. Phases are in radians; fs,
    duration, and the component frequencies share one time unit.
    """
    fs = check_positive(fs, "fs")
    check_non_negative(noise_sd, "noise_sd")
    seed = check_seed(seed)
    duration = check_positive(duration, "duration")
    for _, freq, _ in components:
        if not fs > 2.0 * freq:
            raise ValueError(
                f"fs={fs} violates the Nyquist bound for component at {freq}"
            )

    n = int(round(fs * duration))
    t = np.arange(n) / fs
    x = np.zeros(n)
    for amp, freq, phase in components:
        x += amp * np.sin(2.0 * np.pi * freq * t + phase)
    if noise_sd > 0:
        x = x + np.random.default_rng(seed).normal(0.0, noise_sd, n)
    return _series_from_values(x, fs)


def _periodic_interp(table: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """Linear interpolation on a periodic lookup table; positions in [0, 1)
    are fractions of the table's period.
    """
    m = table.size
    x = (positions % 1.0) * m
    i0 = np.floor(x).astype(int) % m
    i1 = (i0 + 1) % m
    frac = x - np.floor(x)
    return table[i0] * (1.0 - frac) + table[i1] * frac


def synth_modulated(
    daily_profile: Sequence[float],
    weekly_envelope: Sequence[float],
    baseline: float,
    noise_sd: float,
    fs: float,
    days: float,
    seed: int = 0,
) -> EvenSeries:
    """Multiplicative process x(t) = baseline + envelope(t)*profile(t) + noise.

    ``daily_profile`` tabulates one 24 h period and ``weekly_envelope`` one
    7 d period, both indexed from the series start and linearly interpolated.
    A zero-mean envelope suppresses the daily carrier, leaving sidebands.
    """
    fs = check_positive(fs, "fs")
    check_non_negative(noise_sd, "noise_sd")
    seed = check_seed(seed)
    if days < 14:
        raise ValueError("days must be at least 14 (two weekly periods)")

    daily = np.asarray(daily_profile, dtype=float)
    weekly = np.asarray(weekly_envelope, dtype=float)
    if daily.ndim != 1 or daily.size < 2:
        raise ValueError("daily_profile must be a 1-D table of at least 2 values")
    if weekly.ndim != 1 or weekly.size < 2:
        raise ValueError("weekly_envelope must be a 1-D table of at least 2 values")
    if not (np.all(np.isfinite(daily)) and np.all(np.isfinite(weekly))):
        raise ValueError("profile tables must contain only finite values")

    n = int(round(fs * days))
    t_days = np.arange(n) / fs
    x = (
        baseline
        + _periodic_interp(weekly, t_days / 7.0)
        * _periodic_interp(daily, t_days / 1.0)
    )
    if noise_sd > 0:
        x = x + np.random.default_rng(seed).normal(0.0, noise_sd, n)
    return _series_from_values(x, fs)
