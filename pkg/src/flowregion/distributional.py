"""Variation, level-crossing, run-length, tiled-window and nonlinearity features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRange, SingularDesign, TooShort
from .series import StandardizedSeries, difference

DISTRIBUTIONAL_FEATURES = (
    "std1st_der", "crossing_points", "flat_spots", "lumpiness", "stability",
    "nonlinearity",
)


def std1st_der(z: StandardizedSeries) -> float:
    """Sample standard deviation of the first-order differenced series."""
    x = z.values
    if x.size < 3:
        raise TooShort("std1st_der needs at least three points")
    return float(difference(x, 1).std(ddof=1))


def crossing_points(z: StandardizedSeries) -> int:
    """Number of times the series crosses its median.

    Counts sign changes of the indicator x_t <= median between consecutive
    points, so the result depends only on the ordering of the values.
    """
    x = z.values
    if x.size < 2:
        raise TooShort("crossing_points needs at least two points")
    below = x <= np.median(x)
    return int(np.count_nonzero(below[1:] != below[:-1]))


def flat_spots(z: StandardizedSeries, bins: int = 10) -> int:
    """Longest run of values falling in the same decile-style bin.

    The range [min, max] is cut into ``bins`` equal-width intervals, the top
    interval closed at the maximum, and the maximum run length of identical
    bin labels is returned.
    """
    x = z.values
    if x.size < 10:
        raise TooShort("flat_spots needs at least ten points")
    lo, hi = float(x.min()), float(x.max())
    if hi == lo:
        raise DegenerateRange("flat_spots undefined when max(x) == min(x)")
    labels = np.minimum((x - lo) * (bins / (hi - lo)), bins - 1).astype(np.int64)
    changes = np.flatnonzero(labels[1:] != labels[:-1])
    edges = np.concatenate([[-1], changes, [x.size - 1]])
    return int(np.diff(edges).max())


@dataclass
class TiledWindowStats:
    """Per-window means and sample variances over non-overlapping tiles."""

    window_means: np.ndarray
    window_variances: np.ndarray
    width: int


def tiled_windows(z: StandardizedSeries, width: int | None = None) -> TiledWindowStats:
    """Partition into floor(n/width) tiles of ``width`` points; the trailing
    remainder is discarded. Default width is the seasonal period."""
    x = z.values
    w = int(width) if width is not None else z.period
    if w < 1:
        raise ValueError("tile width must be positive")
    n_windows = x.size // w
    if n_windows < 2:
        raise TooShort(f"need at least 2 tiles of width {w}, got length {x.size}")
    tiles = x[: n_windows * w].reshape(n_windows, w)
    return TiledWindowStats(
        window_means=tiles.mean(axis=1),
        window_variances=tiles.var(axis=1, ddof=1),
        width=w,
    )


def tiled_stats(z: StandardizedSeries, width: int | None = None) -> dict[str, float]:
    """stability = variance of tile means; lumpiness = variance of tile variances."""
    stats = tiled_windows(z, width)
    return {
        "stability": float(stats.window_means.var(ddof=1)),
        "lumpiness": float(stats.window_variances.var(ddof=1)),
    }


def nonlinearity(z: StandardizedSeries) -> float:
    """Neural-network-style nonlinearity statistic, scaled to be length-free.

    Fits x_t on {1, x_{t-1}, x_{t-2}} by least squares, then regresses the
    residuals on the same terms plus all second- and third-order monomials of
    (x_{t-1}, x_{t-2}). With R^2 from that auxiliary fit the chi-squared
    statistic is n * R^2; the returned value is 10 * statistic / n.
    """
    x = z.values
    n = x.size
    if n < 20:
        raise TooShort("nonlinearity needs at least twenty points")
    y = x[2:]
    z1 = x[1:-1]
    z2 = x[:-2]
    ones = np.ones_like(y)
    linear = np.column_stack([ones, z1, z2])
    coef, _, rank, _ = np.linalg.lstsq(linear, y, rcond=None)
    if rank < linear.shape[1]:
        raise SingularDesign("collinear lag regressors in the nonlinearity test")
    resid = y - linear @ coef
    ssr0 = float(resid @ resid)
    if ssr0 <= 1e-300:
        return 0.0  # perfect linear fit; zero statistic by continuity
    aux = np.column_stack([
        ones, z1, z2,
        z1 * z1, z1 * z2, z2 * z2,
        z1 ** 3, z1 * z1 * z2, z1 * z2 * z2, z2 ** 3,
    ])
    coef2, _, rank2, _ = np.linalg.lstsq(aux, resid, rcond=None)
    if rank2 < aux.shape[1]:
        raise SingularDesign("rank-deficient monomial design in the nonlinearity test")
    resid2 = resid - aux @ coef2
    r_squared = 1.0 - float(resid2 @ resid2) / ssr0
    return float(max(0.0, 10.0 * r_squared))
