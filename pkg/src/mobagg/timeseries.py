"""Per-ROI time series, weekly seasonal profiles, and stationarity checks.

A series is a fixed-length vector of values over uniform epochs. The weekly
profile holds the per-(weekday, hour) mean over aligned weeks; subtracting
it gives the de-seasonalized series the forecasting layer works on, and
adding it back turns a de-seasonalized prediction into a count forecast.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Sequence, Tuple

import numpy as np

WEEKDAY_NAMES = (
    "Monday",
    "Tuesday",
    "Wednesday",
    "Thursday",
    "Friday",
    "Saturday",
    "Sunday",
)

HOURS_PER_WEEK = 168


class AlignmentError(ValueError):
    """Raised when a series and a profile (or the week grid) do not line up."""


@dataclass(frozen=True)
class EpochSpec:
    """Uniform epoch grid: ``n_epochs`` slots of ``epoch_length`` from ``start``.

    Timestamps are naive fixed-offset wall clock; epoch i covers
    [start + i*length, start + (i+1)*length).
    """

    start: datetime
    n_epochs: int
    epoch_length: timedelta = timedelta(hours=1)

    def __post_init__(self) -> None:
        if self.n_epochs < 1:
            raise ValueError("n_epochs must be >= 1")
        if self.epoch_length <= timedelta(0):
            raise ValueError("epoch_length must be positive")

    @property
    def is_hourly(self) -> bool:
        return self.epoch_length == timedelta(hours=1)

    def timestamp_of(self, index: int) -> datetime:
        return self.start + index * self.epoch_length

    def index_of(self, ts: datetime) -> int | None:
        """Epoch containing ``ts``, or None when it falls outside the grid."""
        if ts < self.start:
            return None
        idx = (ts - self.start) // self.epoch_length
        return idx if idx < self.n_epochs else None

    def slot_of(self, index: int) -> Tuple[int, int]:
        """(weekday, hour) of epoch ``index``; weekday 0 is Monday."""
        ts = self.timestamp_of(index)
        return ts.weekday(), ts.hour


@dataclass(frozen=True)
class RoiTimeSeries:
    """Values of one region of interest over an epoch grid.

    ``kind`` tags what the numbers mean: "raw" observed counts (non-negative),
    "deseasonalized" residuals around the weekly profile, or "predicted".
    """

    roi_id: int
    values: np.ndarray
    epochs: EpochSpec
    kind: str = "raw"

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("series values must be one-dimensional")
        if arr.size != self.epochs.n_epochs:
            raise ValueError(
                f"series length {arr.size} != n_epochs {self.epochs.n_epochs}"
            )
        if not np.isfinite(arr).all():
            raise ValueError("series values must be finite")
        if self.kind == "raw" and arr.min(initial=0.0) < 0:
            raise ValueError("raw counts cannot be negative")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size

    def slot_index(self) -> np.ndarray:
        """weekday*24 + hour per epoch (hourly grids only)."""
        if not self.epochs.is_hourly:
            raise AlignmentError("weekly slots are defined for hourly epochs")
        wd, hr = self.epochs.slot_of(0)
        first = wd * 24 + hr
        return (first + np.arange(len(self))) % HOURS_PER_WEEK


@dataclass(frozen=True)
class SeasonalProfile:
    """Mean value per (weekday, hour) slot, averaged over aligned weeks."""

    means: np.ndarray  # shape (7, 24)
    weeks_used: int
    epoch_length: timedelta = field(default=timedelta(hours=1))

    def __post_init__(self) -> None:
        arr = np.asarray(self.means, dtype=np.float64)
        if arr.shape != (7, 24):
            raise ValueError(f"profile must be 7x24, got {arr.shape}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "means", arr)

    def mean_at(self, weekday: int, hour: int) -> float:
        return float(self.means[weekday, hour])

    def to_json_dict(self) -> dict:
        """The serialized form: weekday name -> 24 hourly means."""
        return {
            name: [float(v) for v in self.means[d]]
            for d, name in enumerate(WEEKDAY_NAMES)
        }

    @classmethod
    def from_json_dict(cls, data: dict, weeks_used: int = 0) -> "SeasonalProfile":
        means = np.zeros((7, 24))
        for d, name in enumerate(WEEKDAY_NAMES):
            if name not in data:
                raise ValueError(f"profile table is missing {name}")
            row = data[name]
            if len(row) != 24:
                raise ValueError(f"{name} must list 24 hourly means")
            means[d] = row
        return cls(means=means, weeks_used=weeks_used)


def truncate_to_whole_weeks(series: RoiTimeSeries) -> RoiTimeSeries:
    """Drop a trailing partial week, warning when anything is cut."""
    whole = (len(series) // HOURS_PER_WEEK) * HOURS_PER_WEEK
    if whole == len(series):
        return series
    if whole == 0:
        raise AlignmentError("series is shorter than one week")
    warnings.warn(
        f"truncating series {series.roi_id} from {len(series)} to {whole} epochs "
        "(whole weeks required)",
        stacklevel=2,
    )
    epochs = EpochSpec(series.epochs.start, whole, series.epochs.epoch_length)
    return RoiTimeSeries(series.roi_id, series.values[:whole], epochs, series.kind)


def seasonal_profile(series: RoiTimeSeries, truncate: bool = False) -> SeasonalProfile:
    """Average each weekly slot over the series' aligned weeks.

    The series must be hourly and span whole weeks; pass ``truncate=True`` to
    cut a partial trailing week instead of failing.
    """
    if not series.epochs.is_hourly:
        raise AlignmentError("profile requires hourly epochs")
    if len(series) % HOURS_PER_WEEK:
        if not truncate:
            raise AlignmentError("profile requires aligned weeks")
        series = truncate_to_whole_weeks(series)
    weeks = len(series) // HOURS_PER_WEEK
    if weeks < 1:
        raise AlignmentError("profile requires at least one whole week")
    slots = series.slot_index()
    sums = np.bincount(slots, weights=series.values, minlength=HOURS_PER_WEEK)
    means = (sums / weeks).reshape(7, 24)
    return SeasonalProfile(means=means, weeks_used=weeks)


def deseasonalize(series: RoiTimeSeries, profile: SeasonalProfile) -> RoiTimeSeries:
    """Subtract the slot mean from every epoch."""
    if series.epochs.epoch_length != profile.epoch_length:
        raise AlignmentError("series and profile epoch lengths differ")
    flat = profile.means.reshape(-1)
    values = series.values - flat[series.slot_index()]
    return RoiTimeSeries(series.roi_id, values, series.epochs, kind="deseasonalized")


def reseasonalize(value: float, profile: SeasonalProfile, slot: Tuple[int, int]) -> float:
    """Add the slot mean back onto a de-seasonalized prediction."""
    weekday, hour = slot
    return float(value) + profile.mean_at(weekday, hour)


@dataclass(frozen=True)
class ForecastErrors:
    """Absolute and percentage errors of a prediction against observations.

    Percentage entries are NaN where the observed value is zero; ``mean`` and
    ``stddev`` summarize the absolute errors (population standard deviation).
    """

    absolute: np.ndarray
    percentage: np.ndarray
    mean: float
    stddev: float

    @property
    def mean_percentage(self) -> float:
        """Mean percentage error over the slots where it is defined."""
        defined = self.percentage[~np.isnan(self.percentage)]
        return float(defined.mean()) if defined.size else float("nan")


def forecast_errors(
    actual: Sequence[float] | np.ndarray | RoiTimeSeries,
    predicted: Sequence[float] | np.ndarray | RoiTimeSeries,
) -> ForecastErrors:
    a = np.asarray(actual.values if isinstance(actual, RoiTimeSeries) else actual, dtype=np.float64)
    p = np.asarray(predicted.values if isinstance(predicted, RoiTimeSeries) else predicted, dtype=np.float64)
    if a.shape != p.shape or a.ndim != 1 or a.size == 0:
        raise ValueError("actual and predicted must be equal-length non-empty vectors")
    absolute = np.abs(a - p)
    with np.errstate(divide="ignore", invalid="ignore"):
        percentage = np.where(a != 0, 100.0 * absolute / np.abs(a), np.nan)
    return ForecastErrors(
        absolute=absolute,
        percentage=percentage,
        mean=float(absolute.mean()),
        stddev=float(absolute.std()),
    )


# --- stationarity ---

@dataclass(frozen=True)
class AdfResult:
    stationary: bool
    statistic: float
    lag: int
    critical_value: float
    n_obs: int


# Critical values of the unit-root t-statistic for the constant, no-trend
# regression, by sample size. Chosen row: largest tabulated size <= n.
_ADF_CRITICAL = {
    0.99: ((25, -3.75), (50, -3.58), (100, -3.51), (250, -3.46), (500, -3.44), (math.inf, -3.43)),
    0.95: ((25, -3.00), (50, -2.93), (100, -2.89), (250, -2.88), (500, -2.87), (math.inf, -2.86)),
}


def _critical_value(confidence: float, n: int) -> float:
    try:
        table = _ADF_CRITICAL[confidence]
    except KeyError:
        raise ValueError(f"confidence must be one of {sorted(_ADF_CRITICAL)}") from None
    value = table[0][1]
    for size, cv in table:
        if n >= size:
            value = cv
    return value


def adf_stationary(
    series: RoiTimeSeries | Sequence[float] | np.ndarray,
    confidence: float = 0.95,
) -> AdfResult:
    """Augmented Dickey-Fuller test with a constant and automatic lag.

    Regresses the first difference on the lagged level, floor((n-1)^(1/3))
    lagged differences, and an intercept; the series is called stationary
    when the t-statistic on the lagged level is below the critical value.
    A constant series is stationary by convention (statistic -inf).
    """
    y = np.asarray(series.values if isinstance(series, RoiTimeSeries) else series, dtype=np.float64)
    n = y.size
    if n < 30:
        raise ValueError(f"stationarity test needs >= 30 observations, got {n}")
    cv = _critical_value(confidence, n)
    if np.ptp(y) == 0.0:
        return AdfResult(True, float("-inf"), 0, cv, n)

    lag = int(math.floor((n - 1) ** (1.0 / 3.0)))
    dy = np.diff(y)
    rows = np.arange(lag, dy.size)
    X = np.empty((rows.size, 2 + lag))
    X[:, 0] = 1.0
    X[:, 1] = y[rows]  # level lagged one epoch behind the response diff
    for i in range(1, lag + 1):
        X[:, 1 + i] = dy[rows - i]
    resp = dy[rows]

    coef, _, rank, _ = np.linalg.lstsq(X, resp, rcond=None)
    if rank < X.shape[1]:
        # Degenerate regressors (near-constant series, duplicated lags).
        return AdfResult(True, float("-inf"), lag, cv, n)
    resid = resp - X @ coef
    dof = rows.size - X.shape[1]
    if dof <= 0:
        raise ValueError("not enough observations for the chosen lag order")
    sigma2 = float(resid @ resid) / dof
    xtx_inv = np.linalg.inv(X.T @ X)
    se = math.sqrt(sigma2 * xtx_inv[1, 1])
    stat = float(coef[1] / se) if se > 0 else float("-inf")
    return AdfResult(stat < cv, stat, lag, cv, n)
