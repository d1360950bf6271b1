"""Linear drift test: OLS slope with Newey-West HAC standard errors.

The regression is y_i = intercept + slope * t_i with t_i in days from the
series start, so the slope is in score units per day. The covariance uses
Bartlett-kernel weights w_l = 1 - l/(L+1) up to truncation lag L; with L=0
it reduces to the White heteroskedasticity-robust estimator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .validation import as_1d_float_array, check_non_negative, check_positive


@dataclass(frozen=True)
class DriftResult:
    slope: float
    intercept: float
    se_slope_hac: float
    t_stat: float
    p_value: float
    lag: int


def fit_drift(y, fs: float, lag_days: float) -> DriftResult:
    """Fit the drift regression and return HAC-robust test statistics.

    Two-sided p-value from the t distribution with N-2 degrees of freedom.
    """
    y = as_1d_float_array(y, "y", min_len=10)
    fs = check_positive(fs, "fs")
    lag_days = check_non_negative(lag_days, "lag_days")

    n = y.size
    lag = int(round(lag_days * fs))
    if lag > n - 2:
        raise ValueError(f"HAC lag {lag} too large for series of length {n}")

    t_days = np.arange(n) / fs
    if np.ptp(t_days) == 0:
        raise ValueError("degenerate design: time column is constant")

    x = np.column_stack([np.ones(n), t_days])
    xtx_inv = np.linalg.inv(x.T @ x)
    beta = xtx_inv @ (x.T @ y)
    resid = y - x @ beta

    # Residuals at rounding-noise level mean the line fits exactly; the
    # robust variance would then be a ratio of floating-point noise, so
    # report a clean no-evidence result instead.
    scale = max(1.0, float(np.sqrt(np.mean(y * y))))
    if np.sqrt(np.mean(resid * resid)) < 100.0 * np.finfo(float).eps * scale:
        return DriftResult(
            slope=float(beta[1]),
            intercept=float(beta[0]),
            se_slope_hac=0.0,
            t_stat=0.0,
            p_value=1.0,
            lag=lag,
        )

    u = x * resid[:, None]
    meat = u.T @ u
    for ell in range(1, lag + 1):
        gamma = u[ell:].T @ u[:-ell]
        meat += (1.0 - ell / (lag + 1.0)) * (gamma + gamma.T)
    cov = xtx_inv @ meat @ xtx_inv

    se_slope = float(np.sqrt(cov[1, 1]))
    t_stat = float(beta[1] / se_slope)
    p_value = float(2.0 * stats.t.sf(abs(t_stat), df=n - 2))
    return DriftResult(
        slope=float(beta[1]),
        intercept=float(beta[0]),
        se_slope_hac=se_slope,
        t_stat=t_stat,
        p_value=p_value,
        lag=lag,
    )
