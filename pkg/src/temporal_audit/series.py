"""Time-series data model: grid alignment, imputation, and aggregations.

Measurements are aligned to an even grid of slots (t0 + i*dt). Slots with no
records are flagged missing and later filled with the grand mean of the
observed replicate scores, which keeps the overall mean untouched while
giving spectral and regression code a gap-free series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from typing import Iterable, Mapping

import numpy as np

from .errors import DataError
from .validation import check_tz_aware

# records may jitter off the nominal slot time by at most this fraction of dt
GRID_TOLERANCE = 0.1


@dataclass(frozen=True)
class MeasurementRecord:
    """One scored probe response at one timestamp."""

    timestamp: datetime
    replicate_index: int
    score: float
    raw_response: str | None = None
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        check_tz_aware(self.timestamp)
        if self.replicate_index < 0:
            raise ValueError("replicate_index must be >= 0")
        if not math.isfinite(self.score):
            raise ValueError("score must be finite")


@dataclass(frozen=True)
class TimePoint:
    """Replicate scores at one grid slot, with gap bookkeeping."""

    replicate_scores: tuple[float, ...]
    missing: bool = False
    imputed: bool = False

    @property
    def observed(self) -> bool:
        return not self.missing


@dataclass(frozen=True)
class EvenSeries:
    """Evenly sampled series of per-slot replicate sets."""

    t0: datetime
    dt: timedelta
    points: tuple[TimePoint, ...]

    def __post_init__(self) -> None:
        check_tz_aware(self.t0, "t0")
        if self.dt <= timedelta(0):
            raise ValueError("dt must be positive")

    @property
    def fs(self) -> float:
        """Samples per day."""
        return 86400.0 / self.dt.total_seconds()

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def gap_count(self) -> int:
        return sum(1 for p in self.points if p.missing)

    def timestamp(self, i: int) -> datetime:
        return self.t0 + i * self.dt

    def observed_scores(self) -> list[float]:
        """All raw replicate scores from observed (non-imputed) slots."""
        out: list[float] = []
        for p in self.points:
            if p.observed and not p.imputed:
                out.extend(p.replicate_scores)
        return out


@dataclass(frozen=True)
class WeekdayHourGrid:
    """Mean score and count per (weekday, slot-of-day) cell, with marginals.

    Weekdays index Monday=0..Sunday=6; columns are day slots of width dt in
    the configured fixed local offset. Cells without data hold NaN mean and
    count 0. Marginals are count-weighted means of their row/column.
    """

    cell_mean: tuple[tuple[float, ...], ...]
    cell_count: tuple[tuple[int, ...], ...]
    weekday_marginal: tuple[float, ...]
    hour_marginal: tuple[float, ...]
    tz_offset_minutes: int

    @property
    def slots_per_day(self) -> int:
        return len(self.cell_mean[0])

    @property
    def total_count(self) -> int:
        return sum(sum(row) for row in self.cell_count)

    def argmax_cell(self) -> tuple[int, int]:
        return self._argextreme(max)

    def argmin_cell(self) -> tuple[int, int]:
        return self._argextreme(min)

    def _argextreme(self, pick) -> tuple[int, int]:
        cells = [
            (self.cell_mean[d][h], d, h)
            for d in range(7)
            for h in range(self.slots_per_day)
            if self.cell_count[d][h] > 0
        ]
        if not cells:
            raise DataError("grid has no populated cells")
        _, d, h = pick(cells)
        return d, h


def build_series(
    records: Iterable[MeasurementRecord],
    t0: datetime,
    dt: timedelta,
    t_end: datetime,
) -> EvenSeries:
    """Align records to the [t0, t_end] grid with spacing dt.

    Timestamps are rounded to the nearest slot within dt*GRID_TOLERANCE;
    anything further off-grid, outside the window, or duplicating a
    (slot, replicate) pair is a DataError.
    """
    check_tz_aware(t0, "t0")
    check_tz_aware(t_end, "t_end")
    if dt <= timedelta(0):
        raise DataError("dt must be positive")
    if t_end < t0:
        raise DataError("t_end precedes t0")

    dt_s = dt.total_seconds()
    span = (t_end - t0).total_seconds() / dt_s
    n_slots = int(math.floor(span + GRID_TOLERANCE)) + 1

    per_slot: dict[int, dict[int, float]] = {}
    for rec in records:
        x = (rec.timestamp - t0).total_seconds() / dt_s
        i = int(round(x))
        if abs(x - i) > GRID_TOLERANCE:
            raise DataError(
                f"timestamp {rec.timestamp.isoformat()} is off-grid "
                f"(nearest slot {i}, offset {abs(x - i):.3f} dt)"
            )
        if not 0 <= i < n_slots:
            raise DataError(
                f"timestamp {rec.timestamp.isoformat()} outside window "
                f"[{t0.isoformat()}, {t_end.isoformat()}]"
            )
        slot = per_slot.setdefault(i, {})
        if rec.replicate_index in slot:
            raise DataError(
                f"duplicate replicate {rec.replicate_index} in slot {i}"
            )
        slot[rec.replicate_index] = rec.score

    points = []
    for i in range(n_slots):
        reps = per_slot.get(i)
        if reps:
            scores = tuple(reps[r] for r in sorted(reps))
            points.append(TimePoint(replicate_scores=scores))
        else:
            points.append(TimePoint(replicate_scores=(), missing=True))
    return EvenSeries(t0=t0, dt=dt, points=tuple(points))


def impute_missing(series: EvenSeries) -> EvenSeries:
    """Fill each missing slot with one synthetic replicate equal to the
    grand mean of all observed replicate scores. Observed slots unchanged.
    """
    observed = series.observed_scores()
    if not observed:
        raise DataError("cannot impute: every slot is missing")
    grand_mean = float(np.mean(observed))

    points = tuple(
        TimePoint(replicate_scores=(grand_mean,), missing=True, imputed=True)
        if p.missing and not p.imputed
        else p
        for p in series.points
    )
    return EvenSeries(t0=series.t0, dt=series.dt, points=points)


def aggregate_replicates(series: EvenSeries) -> np.ndarray:
    """Per-slot mean scores. Requires a gap-free (imputed) series."""
    means = np.empty(series.n)
    for i, p in enumerate(series.points):
        if not p.replicate_scores:
            raise DataError(f"slot {i} is missing; impute before aggregating")
        means[i] = float(np.mean(p.replicate_scores))
    return means


def _local_ts(series: EvenSeries, i: int, tz_offset: timedelta) -> datetime:
    # fixed configured offset, deliberately not DST-aware
    return series.timestamp(i).astimezone(timezone(tz_offset))


def _iter_observed(series: EvenSeries):
    for i, p in enumerate(series.points):
        if p.observed and not p.imputed and p.replicate_scores:
            yield i, p


def daily_means(
    series: EvenSeries, tz_offset: timedelta = timedelta(0)
) -> list[tuple[date, float, float]]:
    """Count-weighted (date, mean, sd) over observed replicate scores, with
    dates taken in the configured fixed UTC offset. SD is population SD.
    """
    buckets: dict[date, list[float]] = {}
    for i, p in _iter_observed(series):
        day = _local_ts(series, i, tz_offset).date()
        buckets.setdefault(day, []).extend(p.replicate_scores)
    return [
        (day, float(np.mean(vals)), float(np.std(vals)))
        for day, vals in sorted(buckets.items())
    ]


def weekly_means(
    series: EvenSeries, tz_offset: timedelta = timedelta(0)
) -> list[tuple[date, float, float]]:
    """Like daily_means but per Monday-to-Sunday week, keyed by the Monday."""
    buckets: dict[date, list[float]] = {}
    for i, p in _iter_observed(series):
        day = _local_ts(series, i, tz_offset).date()
        monday = day - timedelta(days=day.weekday())
        buckets.setdefault(monday, []).extend(p.replicate_scores)
    return [
        (monday, float(np.mean(vals)), float(np.std(vals)))
        for monday, vals in sorted(buckets.items())
    ]


def weekday_hour_grid(
    series: EvenSeries, tz_offset: timedelta = timedelta(0)
) -> WeekdayHourGrid:
    """Aggregate observed replicate scores by (weekday, slot-of-day)."""
    fs = series.fs
    spd = round(fs)
    if abs(fs - spd) > 1e-9 or spd < 1:
        raise DataError(f"slots per day must be an integer, got fs={fs}")

    dt_s = series.dt.total_seconds()
    sums = np.zeros((7, spd))
    counts = np.zeros((7, spd), dtype=int)
    for i, p in _iter_observed(series):
        local = _local_ts(series, i, tz_offset)
        seconds_into_day = (
            local - local.replace(hour=0, minute=0, second=0, microsecond=0)
        ).total_seconds()
        x = seconds_into_day / dt_s
        h = int(round(x))
        if abs(x - h) > GRID_TOLERANCE:
            raise DataError(
                "series start is not aligned to the local day grid; "
                f"slot {i} falls {abs(x - h):.3f} dt from a day slot"
            )
        h %= spd
        d = local.weekday()
        sums[d, h] += float(np.sum(p.replicate_scores))
        counts[d, h] += len(p.replicate_scores)

    def weighted(sum_vec, count_vec):
        return tuple(
            float(s / c) if c > 0 else float("nan")
            for s, c in zip(sum_vec, count_vec)
        )

    cell_mean = tuple(weighted(sums[d], counts[d]) for d in range(7))
    return WeekdayHourGrid(
        cell_mean=cell_mean,
        cell_count=tuple(tuple(int(c) for c in counts[d]) for d in range(7)),
        weekday_marginal=weighted(sums.sum(axis=1), counts.sum(axis=1)),
        hour_marginal=weighted(sums.sum(axis=0), counts.sum(axis=0)),
        tz_offset_minutes=int(tz_offset.total_seconds() // 60),
    )
