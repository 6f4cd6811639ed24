"""Rolling one-step-ahead forecasts over a de-seasonalized window.

The forecaster works a day at a time: refit on the trailing training window
at the day boundary, then walk the day's slots predicting one step ahead and
feeding the true observation back in before the next slot. Predictions are
re-seasonalized before scoring, so errors are in observed-count units.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..timeseries import (
    ForecastErrors,
    RoiTimeSeries,
    SeasonalProfile,
    deseasonalize,
    forecast_errors,
)
from .arma import FitError, fit_arma, forecast_one, select_order


@dataclass(frozen=True)
class RollingForecast:
    """One-step predictions over consecutive scanned days for one ROI.

    ``residuals`` are signed (actual - predicted). ``train_mu`` and
    ``train_sigma`` summarize the in-sample innovations of the first day's
    fitted model; they are diagnostics only. Anomaly thresholds need
    out-of-sample error statistics, see calibrate_residuals.
    """

    roi_id: int
    epoch_indices: np.ndarray
    actuals: np.ndarray
    predictions: np.ndarray
    residuals: np.ndarray
    errors: ForecastErrors
    orders: Tuple[int, int]
    fallback_epochs: Tuple[int, ...]
    train_mu: float
    train_sigma: float


def rolling_scan(
    series: RoiTimeSeries,
    profile: SeasonalProfile | None,
    start_day: int,
    n_days: int,
    train_days: int = 5,
    orders: Tuple[int, int] | None = None,
    epochs_per_day: int = 24,
) -> RollingForecast:
    """Scan ``n_days`` consecutive days starting at ``start_day``.

    With a profile the model runs on de-seasonalized values and predictions
    are re-seasonalized; without one it runs on the raw series (the black-box
    baseline). ``orders`` defaults to an AIC selection on the first training
    window. A day whose fit fails falls back to the seasonal mean (zero in
    de-seasonalized space, the window mean in raw space) and its slots are
    flagged rather than raised.
    """
    epd = epochs_per_day
    if train_days < 1 or n_days < 1:
        raise ValueError("train_days and n_days must be >= 1")
    if start_day < train_days:
        raise ValueError(
            f"day {start_day} has only {start_day} days of history, need {train_days}"
        )
    scan_end = (start_day + n_days) * epd
    if scan_end > len(series):
        raise ValueError(f"scan ends at epoch {scan_end}, series has {len(series)}")

    if profile is not None:
        d = deseasonalize(series, profile).values
    else:
        d = series.values
    seasonal = series.values - d

    if orders is None:
        first = d[(start_day - train_days) * epd : start_day * epd]
        orders = select_order(first)
    p, q = orders

    predictions: list[float] = []
    residuals: list[float] = []
    fallback: list[int] = []
    train_mu = train_sigma = float("nan")
    have_train_stats = False

    for day in range(start_day, start_day + n_days):
        w0 = (day - train_days) * epd
        w1 = day * epd
        window = d[w0:w1]
        try:
            model = fit_arma(window, p, q)
        except (FitError, ValueError, np.linalg.LinAlgError):
            model = None
        if model is not None and not have_train_stats:
            tail = model.residuals[model.p :]
            train_mu = float(tail.mean())
            train_sigma = float(tail.std())
            have_train_stats = True

        history = list(window)
        innovations = list(model.residuals) if model is not None else []
        for t in range(w1, w1 + epd):
            if model is None:
                d_hat = 0.0 if profile is not None else float(window.mean())
                fallback.append(t)
            else:
                d_hat = forecast_one(model, history, innovations)
            predictions.append(d_hat + seasonal[t])
            d_true = float(d[t])
            residuals.append(d_true - d_hat)
            history.append(d_true)
            innovations.append(d_true - d_hat if model is not None else 0.0)

    idx = np.arange(start_day * epd, scan_end)
    actuals = series.values[idx]
    preds = np.asarray(predictions)
    return RollingForecast(
        roi_id=series.roi_id,
        epoch_indices=idx,
        actuals=actuals,
        predictions=preds,
        residuals=np.asarray(residuals),
        errors=forecast_errors(actuals, preds),
        orders=(p, q),
        fallback_epochs=tuple(fallback),
        train_mu=train_mu,
        train_sigma=train_sigma,
    )


def calibrate_residuals(
    series: RoiTimeSeries,
    profile: SeasonalProfile | None,
    end_day: int,
    train_days: int = 5,
    calibration_days: int = 7,
    orders: Tuple[int, int] | None = None,
    epochs_per_day: int = 24,
) -> Tuple[float, float]:
    """(mu, sigma) of one-step forecast errors over the week before end_day.

    Thresholds must come from out-of-sample errors: in-sample innovations
    understate the error scale (fitted parameters absorb part of it, and so
    does an estimated seasonal profile), which makes a 3-sigma band fire far
    too often. Scanning the calibration window with the same forecaster that
    will scan the test window measures the right distribution.
    """
    if calibration_days < 1:
        raise ValueError("calibration_days must be >= 1")
    scan = rolling_scan(
        series,
        profile,
        start_day=end_day - calibration_days,
        n_days=calibration_days,
        train_days=train_days,
        orders=orders,
        epochs_per_day=epochs_per_day,
    )
    return float(scan.residuals.mean()), float(scan.residuals.std())


def rolling_forecast(
    series: RoiTimeSeries,
    profile: SeasonalProfile | None,
    test_day: int,
    train_days: int = 5,
    orders: Tuple[int, int] | None = None,
    epochs_per_day: int = 24,
) -> RollingForecast:
    """Forecast a single test day; see rolling_scan."""
    return rolling_scan(
        series,
        profile,
        start_day=test_day,
        n_days=1,
        train_days=train_days,
        orders=orders,
        epochs_per_day=epochs_per_day,
    )
