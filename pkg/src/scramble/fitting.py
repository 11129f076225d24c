"""Least-squares fits of power laws and exponentials on time windows."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .records import TimeSeriesRecord


@dataclass
class FitResult:
    exponent: float          # power-law exponent or exponential rate
    prefactor: float
    r_squared: float
    window: tuple
    n_points: int


def _window_mask(times, values, t_window):
    t0, t1 = t_window
    mask = (times >= t0) & (times <= t1)
    if not np.any(mask):
        raise ValueError(f"no samples inside window {t_window}")
    if np.any(values[mask] <= 0):
        raise ValueError("log fit needs positive values inside the window")
    return mask


def _lsq_line(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 if ss_tot == 0 else 1.0 - (res[0] / ss_tot if len(res) else 0.0)
    return coef[0], coef[1], float(r2)


def fit_power_law(series: TimeSeriesRecord, t_window) -> FitResult:
    """values ~ prefactor * t^exponent, least squares in log-log space."""
    mask = _window_mask(series.times, series.values, t_window)
    if np.any(series.times[mask] <= 0):
        raise ValueError("power-law window must exclude t <= 0")
    slope, intercept, r2 = _lsq_line(np.log(series.times[mask]),
                                     np.log(series.values[mask]))
    return FitResult(float(slope), float(np.exp(intercept)), r2,
                     tuple(t_window), int(mask.sum()))


def fit_exponential(series: TimeSeriesRecord, t_window) -> FitResult:
    """values ~ prefactor * exp(rate * t), least squares in log-linear space."""
    mask = _window_mask(series.times, series.values, t_window)
    rate, intercept, r2 = _lsq_line(series.times[mask],
                                    np.log(series.values[mask]))
    return FitResult(float(rate), float(np.exp(intercept)), r2,
                     tuple(t_window), int(mask.sum()))
