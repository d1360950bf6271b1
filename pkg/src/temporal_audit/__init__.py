"""Audit a stochastic networked service for time-invariant performance.

The package covers the full loop: schedule replicated probes against a
chat-completions endpoint, score the structured answers, build an evenly
spaced time series from the measurement log, test it for slow drift (OLS
with HAC standard errors) and periodic structure (Welch spectra with
permutation significance bands), classify significant peaks against a
daily-times-weekly modulation model, and reconstruct the implied composite
oscillation.  A command-line front end exposes the probe / analyze /
simulate / report pipeline.
"""

from .audit import DriftEstimator, PeriodicityAuditor
from .drift import DriftResult, fit_drift
from .errors import (
    DataError,
    ParseFailure,
    TemporalAuditError,
    TransportError,
    UsageError,
)
from .logio import (
    JsonlLogSink,
    export_csv,
    format_rfc3339,
    parse_rfc3339,
    read_measurements,
    series_to_records,
    write_measurements,
)
from .modulation import (
    SIMULATION_EPOCH,
    ModulationModel,
    PeakClassification,
    SpectralLine,
    classify_peaks,
    predict_frequencies,
    synth_modulated,
    synth_sines,
)
from .phase import PhaseFit, fit_phase, reconstruct
from .probe import (
    API_KEY_ENV,
    PARSE_FAILED,
    SCORED,
    TRANSPORT_FAILED,
    ProbeConfig,
    ProbeOutcome,
    ScheduleSummary,
    issue_request,
    request_body,
    run_schedule,
)
from .report import AnalysisConfig, infer_grid, render_report, run_analysis
from .scoring import StructuredAnswer, TaskSpec, parse_structured, score_response
from .series import (
    EvenSeries,
    MeasurementRecord,
    TimePoint,
    WeekdayHourGrid,
    aggregate_replicates,
    build_series,
    daily_means,
    impute_missing,
    weekday_hour_grid,
    weekly_means,
)
from .spectral import (
    PeakInfo,
    SignificanceBand,
    Spectrum,
    WelchConfig,
    detect_peaks,
    explained_variance,
    permutation_band,
    welch,
)

__version__ = "0.1.0"

__all__ = [
    "API_KEY_ENV",
    "AnalysisConfig",
    "DataError",
    "DriftEstimator",
    "DriftResult",
    "EvenSeries",
    "JsonlLogSink",
    "MeasurementRecord",
    "ModulationModel",
    "PARSE_FAILED",
    "ParseFailure",
    "PeakClassification",
    "PeakInfo",
    "PeriodicityAuditor",
    "PhaseFit",
    "ProbeConfig",
    "ProbeOutcome",
    "SCORED",
    "SIMULATION_EPOCH",
    "ScheduleSummary",
    "SignificanceBand",
    "SpectralLine",
    "Spectrum",
    "StructuredAnswer",
    "TRANSPORT_FAILED",
    "TaskSpec",
    "TemporalAuditError",
    "TimePoint",
    "TransportError",
    "UsageError",
    "WeekdayHourGrid",
    "WelchConfig",
    "aggregate_replicates",
    "build_series",
    "classify_peaks",
    "daily_means",
    "detect_peaks",
    "explained_variance",
    "export_csv",
    "fit_drift",
    "fit_phase",
    "format_rfc3339",
    "impute_missing",
    "infer_grid",
    "issue_request",
    "parse_rfc3339",
    "parse_structured",
    "permutation_band",
    "predict_frequencies",
    "read_measurements",
    "reconstruct",
    "render_report",
    "request_body",
    "run_analysis",
    "run_schedule",
    "score_response",
    "series_to_records",
    "synth_modulated",
    "synth_sines",
    "weekday_hour_grid",
    "weekly_means",
    "welch",
    "write_measurements",
]
