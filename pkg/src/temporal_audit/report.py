"""Analysis pipeline: measurement log in, deterministic audit report out.

The report is a plain JSON document (sorted keys, no wall-clock stamps) whose
``config_echo`` section contains everything needed to reproduce it
bit-identically from the same log.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import timedelta
from pathlib import Path

import numpy as np

from .audit import DriftEstimator, PeriodicityAuditor
from .errors import DataError
from .logio import read_measurements
from .modulation import ModulationModel
from .series import (
    EvenSeries,
    aggregate_replicates,
    build_series,
    daily_means,
    impute_missing,
    weekday_hour_grid,
    weekly_means,
)

SPECTRUM_FILE = "spectrum.csv"
PEAKS_FILE = "peaks.json"
SLOT_MEANS_FILE = "slot_means.csv"
REPORT_FILE = "report.json"


@dataclass(frozen=True)
class AnalysisConfig:
    """Parameters of one analysis run; defaults echo the standard pipeline."""

    nperseg_div: int = 4
    n_perm: int = 1000
    alpha: float = 0.05
    hac_lag_days: float = 7.0
    seed: int = 0
    tz_offset_minutes: int = 0
    normalization: str = "amplitude"
    detrend: str = "mean"
    overlap: float = 0.5
    horizon_days: float = 700.0
    k_max: int = 3
    m_max: int = 1


def infer_grid(records) -> tuple:
    """Infer (t0, dt, t_end) from record timestamps: the window bounds plus
    the smallest positive spacing between distinct slot times.
    """
    stamps = sorted({rec.timestamp for rec in records})
    if not stamps:
        raise DataError("log contains no scored measurements")
    if len(stamps) == 1:
        raise DataError("cannot infer a grid from a single time slot")
    diffs = [b - a for a, b in zip(stamps, stamps[1:])]
    dt = min(diffs)
    if dt <= timedelta(0):
        raise DataError("non-increasing timestamps in log")
    return stamps[0], dt, stamps[-1]


def _weekday_grid_dict(series: EvenSeries, tz_offset: timedelta):
    try:
        grid = weekday_hour_grid(series, tz_offset)
    except DataError as exc:
        return None, str(exc)
    def clean(values):
        return [None if np.isnan(v) else float(v) for v in values]
    return (
        {
            "cell_mean": [clean(row) for row in grid.cell_mean],
            "cell_count": [list(row) for row in grid.cell_count],
            "weekday_marginal": clean(grid.weekday_marginal),
            "hour_marginal": clean(grid.hour_marginal),
            "tz_offset_minutes": grid.tz_offset_minutes,
            "slots_per_day": grid.slots_per_day,
        },
        None,
    )


def run_analysis(log_path, cfg: AnalysisConfig, out_dir=None) -> dict:
    """Execute the full pipeline on a JSONL measurement log.

    Returns the report as a dict; when ``out_dir`` is given, also writes
    report.json plus spectrum.csv, peaks.json, and slot_means.csv sidecars.
    """
    records, skipped = read_measurements(log_path)
    if not records:
        raise DataError(f"{log_path}: no scored measurements")

    t0, dt, t_end = infer_grid(records)
    series = build_series(records, t0=t0, dt=dt, t_end=t_end)
    observed = series.observed_scores()
    imputed = impute_missing(series)
    y = aggregate_replicates(imputed)
    fs = series.fs

    drift = DriftEstimator(fs=fs, lag_days=cfg.hac_lag_days).fit(y)
    auditor = PeriodicityAuditor(
        fs=fs,
        nperseg_div=cfg.nperseg_div,
        overlap=cfg.overlap,
        normalization=cfg.normalization,
        detrend=cfg.detrend,
        n_perm=cfg.n_perm,
        alpha=cfg.alpha,
        seed=cfg.seed,
        model=ModulationModel(k_max=cfg.k_max, m_max=cfg.m_max),
        horizon_days=cfg.horizon_days,
    ).fit(y)

    tz_offset = timedelta(minutes=cfg.tz_offset_minutes)
    grid_dict, grid_note = _weekday_grid_dict(series, tz_offset)

    peaks = []
    for peak, cls, fit in zip(
        auditor.peaks_, auditor.classifications_, auditor.phase_fits_
    ):
        entry = {
            "period": float(peak.period),
            "freq_per_day": float(peak.freq),
            "power": float(peak.power),
            "amplitude": float(peak.amplitude),
            "phase_deg": float(fit.phase_deg),
            "bin_index": int(peak.bin_index),
            "label": cls.label,
            "predicted_freq": cls.predicted_freq,
            "deviation": cls.deviation,
            "k": cls.line.k if cls.line else None,
            "m": cls.line.m if cls.line else None,
            "sign": cls.line.sign if cls.line else None,
        }
        peaks.append(entry)

    report = {
        "series_summary": {
            "n_slots": series.n,
            "fs_per_day": float(fs),
            "t0": series.t0.isoformat(),
            "dt_seconds": series.dt.total_seconds(),
            "n_observations": len(observed),
            "mean": float(np.mean(observed)),
            "sd_raw": float(np.std(observed)),
            "sd_avg": float(np.std(y)),
            "gap_slots": series.gap_count,
            "skipped_log_lines": skipped,
        },
        "drift": {
            "slope_per_day": drift.slope_,
            "intercept": drift.intercept_,
            "se_hac": drift.se_slope_,
            "t": drift.t_stat_,
            "p": drift.p_value_,
            "lag_samples": drift.lag_,
        },
        "spectrum_file": SPECTRUM_FILE,
        "peaks": peaks,
        "explained_variance": float(auditor.explained_variance_),
        "reconstruction_peak_to_peak": float(auditor.reconstruction_ptp_),
        "grids": {
            "weekday_hour": grid_dict,
            "weekday_hour_note": grid_note,
            "daily_means": [
                {"date": d.isoformat(), "mean": m, "sd": s}
                for d, m, s in daily_means(series, tz_offset)
            ],
            "weekly_means": [
                {"week_start": d.isoformat(), "mean": m, "sd": s}
                for d, m, s in weekly_means(series, tz_offset)
            ],
        },
        "config_echo": {
            "nperseg": auditor.welch_config_.nperseg,
            "nperseg_div": cfg.nperseg_div,
            "overlap": cfg.overlap,
            "window": auditor.welch_config_.window,
            "normalization": cfg.normalization,
            "detrend": cfg.detrend,
            "n_perm": cfg.n_perm,
            "alpha": cfg.alpha,
            "seed": cfg.seed,
            "hac_lag_days": cfg.hac_lag_days,
            "tz_offset_minutes": cfg.tz_offset_minutes,
            "classification_tolerance": float(auditor.tolerance_),
            "k_max": cfg.k_max,
            "m_max": cfg.m_max,
            "horizon_days": cfg.horizon_days,
            "reconstruction_resolution": float(fs),
        },
    }

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_report_json(report, out / REPORT_FILE)
        _write_spectrum_csv(out / SPECTRUM_FILE, auditor)
        (out / PEAKS_FILE).write_text(
            json.dumps(peaks, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        _write_slot_means_csv(out / SLOT_MEANS_FILE, imputed, y)
    return report


def write_report_json(report: dict, path) -> None:
    Path(path).write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _write_spectrum_csv(path, auditor: PeriodicityAuditor) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["freq_per_day", "power", "threshold"])
        for f, p, thr in zip(
            auditor.spectrum_.freqs,
            auditor.spectrum_.power,
            auditor.band_.threshold,
        ):
            writer.writerow([repr(float(f)), repr(float(p)), repr(float(thr))])


def _write_slot_means_csv(path, series: EvenSeries, y) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ts", "mean", "imputed"])
        for i, value in enumerate(y):
            writer.writerow(
                [
                    series.timestamp(i).isoformat(),
                    repr(float(value)),
                    int(series.points[i].imputed),
                ]
            )


def _fmt_period(freq_per_day: float) -> str:
    period_days = 1.0 / freq_per_day
    if period_days >= 2.0:
        return f"{period_days:.1f} d"
    return f"{period_days * 24.0:.1f} h"


def render_report(report: dict, fmt: str = "text") -> str:
    """Render a stored report for reading: ``text`` tables or peaks ``csv``."""
    if fmt == "csv":
        lines = ["period,freq_per_day,power,amplitude,phase_deg,label"]
        for p in report["peaks"]:
            lines.append(
                f"{_fmt_period(p['freq_per_day'])},{p['freq_per_day']:.6g},"
                f"{p['power']:.6g},{p['amplitude']:.6g},"
                f"{p['phase_deg']:.1f},{p['label']}"
            )
        return "\n".join(lines) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown report format {fmt!r}")

    s = report["series_summary"]
    d = report["drift"]
    out = []
    out.append("Series")
    out.append(
        f"  slots={s['n_slots']}  fs={s['fs_per_day']:g}/day  "
        f"gaps={s['gap_slots']}  observations={s['n_observations']}"
    )
    out.append(
        f"  mean={s['mean']:.4g}  sd_raw={s['sd_raw']:.4g}  "
        f"sd_avg={s['sd_avg']:.4g}"
    )
    out.append("Drift")
    out.append(
        f"  slope={d['slope_per_day']:.4g}/day  se={d['se_hac']:.4g}  "
        f"t={d['t']:.3g}  p={d['p']:.3g}  lag={d['lag_samples']}"
    )
    out.append("Peaks")
    if report["peaks"]:
        out.append(
            "  period      freq/day    power       amplitude  phase   label"
        )
        for p in report["peaks"]:
            out.append(
                f"  {_fmt_period(p['freq_per_day']):<10}  "
                f"{p['freq_per_day']:<10.4g}  {p['power']:<10.4g}  "
                f"{p['amplitude']:<9.4g}  {p['phase_deg']:>6.1f}  {p['label']}"
            )
    else:
        out.append("  none significant")
    out.append(
        f"Explained variance: {report['explained_variance']:.3f}   "
        f"Reconstruction peak-to-peak: "
        f"{report['reconstruction_peak_to_peak']:.4g}"
    )
    wk = report["grids"]["weekday_hour"]
    if wk:
        days = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"]
        marg = [
            f"{days[i]}={v:.3f}" if v is not None else f"{days[i]}=-"
            for i, v in enumerate(wk["weekday_marginal"])
        ]
        out.append("Weekday marginals: " + "  ".join(marg))
    return "\n".join(out) + "\n"
