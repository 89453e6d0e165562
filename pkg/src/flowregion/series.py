"""Daily time-series containers plus the preprocessing all features share."""

from __future__ import annotations

import datetime
from dataclasses import dataclass

import numpy as np

from .errors import MissingData, NonFinite, TooShort, ZeroVariance

VARIABLE_KINDS = ("temperature", "precipitation", "streamflow")

DEFAULT_PERIOD = 365


@dataclass
class TimeSeries:
    """A gap-free, regularly sampled daily sequence.

    ``values`` are one observation per day after leap-day removal, so the
    seasonal cycle length is exactly ``period`` (365 here). Completeness is
    enforced at ingestion; :func:`validate` re-checks it cheaply.
    """

    values: np.ndarray
    start_date: datetime.date = datetime.date(1980, 1, 1)
    period: int = DEFAULT_PERIOD
    variable_kind: str = "streamflow"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ValueError("series values must be one-dimensional")
        if self.period < 2:
            raise ValueError(f"period must be >= 2, got {self.period}")
        if self.variable_kind not in VARIABLE_KINDS:
            raise ValueError(f"unknown variable kind {self.variable_kind!r}")

    def __len__(self) -> int:
        return self.values.size


@dataclass
class StandardizedSeries:
    """A series rescaled to sample mean 0 and sample standard deviation 1."""

    values: np.ndarray
    period: int = DEFAULT_PERIOD

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)

    def __len__(self) -> int:
        return self.values.size


def validate(series: TimeSeries) -> TimeSeries:
    """Return ``series`` unchanged if it is complete, finite and long enough.

    Raises MissingData for NaNs, NonFinite for infinities and TooShort when
    fewer than two full seasonal cycles are available.
    """
    x = series.values
    if np.isnan(x).any():
        raise MissingData(f"series contains {int(np.isnan(x).sum())} NaN value(s)")
    if np.isinf(x).any():
        raise NonFinite("series contains non-finite values")
    if x.size < 2 * series.period:
        raise TooShort(
            f"length {x.size} < 2 x period ({2 * series.period}); "
            "seasonal features need at least two full cycles"
        )
    return series


def zscore(values: np.ndarray) -> np.ndarray:
    """(x - mean) / sd with the sample (n-1) standard deviation."""
    x = np.asarray(values, dtype=np.float64)
    if x.size < 2:
        raise TooShort("standardization needs at least two points")
    sd = x.std(ddof=1)
    if sd == 0.0:
        raise ZeroVariance("constant series cannot be standardized")
    return (x - x.mean()) / sd


def standardize(series: TimeSeries) -> StandardizedSeries:
    """Scale a series to mean 0, sample standard deviation 1."""
    return StandardizedSeries(zscore(series.values), period=series.period)


def difference(values, order: int = 1) -> np.ndarray:
    """Order-1 or order-2 differencing: y_t = x_{t+1} - x_t, applied ``order`` times."""
    if order not in (1, 2):
        raise ValueError(f"difference order must be 1 or 2, got {order}")
    x = np.asarray(values, dtype=np.float64)
    if x.size <= order:
        raise TooShort(f"length {x.size} too short for order-{order} differencing")
    return np.diff(x, n=order)
