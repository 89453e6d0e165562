"""Autocorrelation, partial autocorrelation and spectral-entropy features.

Thirteen of the twenty-eight features live here: the ACF family on the raw
and differenced series, the PACF family, the seasonal lag-365 statistics and
the spectral entropy of the periodogram.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LagTooLarge, NumericalSingularity, TooShort, ZeroVariance
from .series import StandardizedSeries, difference

ACF_FEATURES = (
    "x_acf1", "x_acf10", "diff1_acf1", "diff1_acf10", "diff2_acf1",
    "diff2_acf10", "seas_acf1", "firstzero_ac",
)
PACF_FEATURES = ("x_pacf5", "diff1x_pacf5", "diff2x_pacf5", "seas_pacf")


@dataclass
class AcfVector:
    """Sample autocorrelations r_1..r_max_lag (biased, divide-by-n convention)."""

    r: np.ndarray
    n: int


@dataclass
class PacfVector:
    """Sample partial autocorrelations phi_1..phi_max_lag."""

    phi: np.ndarray


def acf(x, max_lag: int) -> AcfVector:
    """Biased sample autocorrelation at lags 1..max_lag.

    r_k = sum_{t<=n-k} (x_t - m)(x_{t+k} - m) / sum_t (x_t - m)^2.

    The divide-by-n convention keeps the sequence positive semidefinite, so
    |r_k| <= 1 and the Durbin-Levinson recursion in :func:`pacf` is stable.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if max_lag < 1:
        raise ValueError("max_lag must be >= 1")
    if max_lag >= n:
        raise LagTooLarge(f"max_lag {max_lag} >= series length {n}")
    xc = x - x.mean()
    denom = float(xc @ xc)
    if denom <= 0.0:
        raise ZeroVariance("autocorrelation undefined for a constant series")
    r = np.empty(max_lag)
    for k in range(1, max_lag + 1):
        r[k - 1] = xc[: n - k] @ xc[k:]
    r /= denom
    return AcfVector(r=r, n=n)


def pacf_from_acf(r: np.ndarray) -> np.ndarray:
    """Durbin-Levinson recursion mapping autocorrelations to partials."""
    m = r.size
    phi = np.empty(m)
    a = np.empty(m)  # current AR(k) coefficients
    phi[0] = a[0] = r[0]
    for k in range(2, m + 1):
        num = r[k - 1] - a[: k - 1] @ r[k - 2 :: -1]
        den = 1.0 - a[: k - 1] @ r[: k - 1]
        if abs(den) < 1e-12:
            raise NumericalSingularity(
                f"Durbin-Levinson denominator {den:.3e} at order {k}"
            )
        pk = num / den
        a[: k - 1] = a[: k - 1] - pk * a[k - 2 :: -1]
        a[k - 1] = pk
        phi[k - 1] = pk
    return phi


def pacf(x, max_lag: int) -> PacfVector:
    """Sample PACF at lags 1..max_lag; phi_1 equals r_1 exactly."""
    return PacfVector(phi=pacf_from_acf(acf(x, max_lag).r))


def acf_feature_set(z: StandardizedSeries, scan_factor: int = 2) -> dict[str, float]:
    """The eight autocorrelation features of one standardized series.

    ``firstzero_ac`` scans to min(n-1, scan_factor * period) and returns that
    bound when the ACF never crosses zero, which keeps the feature total.
    """
    x = z.values
    p = z.period
    n = x.size
    if n < 2 * p + 2:
        raise TooShort(f"need length >= {2 * p + 2} for the ACF feature set, got {n}")
    cap = min(n - 1, scan_factor * p)
    r = acf(x, max(cap, p, 10)).r
    d1 = difference(x, 1)
    d2 = difference(x, 2)
    r1 = acf(d1, 10).r
    r2 = acf(d2, 10).r
    nonpos = np.flatnonzero(r[:cap] <= 0.0)
    firstzero = int(nonpos[0]) + 1 if nonpos.size else cap
    return {
        "x_acf1": float(r[0]),
        "x_acf10": float(r[:10] @ r[:10]),
        "diff1_acf1": float(r1[0]),
        "diff1_acf10": float(r1 @ r1),
        "diff2_acf1": float(r2[0]),
        "diff2_acf10": float(r2 @ r2),
        "seas_acf1": float(r[p - 1]),
        "firstzero_ac": float(firstzero),
    }


def pacf_feature_set(z: StandardizedSeries) -> dict[str, float]:
    """The four partial-autocorrelation features of one standardized series."""
    x = z.values
    p = z.period
    phi = pacf(x, p).phi
    phi1 = pacf(difference(x, 1), 5).phi
    phi2 = pacf(difference(x, 2), 5).phi
    return {
        "x_pacf5": float(phi[:5] @ phi[:5]),
        "diff1x_pacf5": float(phi1 @ phi1),
        "diff2x_pacf5": float(phi2 @ phi2),
        "seas_pacf": float(phi[p - 1]),
    }


def _modified_daniell(values: np.ndarray, span: int) -> np.ndarray:
    """One modified-Daniell smoothing pass with reflection at the ends."""
    if span < 1 or span >= values.size:
        raise ValueError(f"Daniell span {span} invalid for {values.size} ordinates")
    kernel = np.full(2 * span + 1, 1.0 / (2 * span))
    kernel[0] = kernel[-1] = 0.5 / (2 * span)
    padded = np.concatenate([values[span:0:-1], values, values[-2 : -span - 2 : -1]])
    return np.convolve(padded, kernel, mode="valid")


def spectral_entropy(z, smooth_spans: tuple[int, ...] = (3, 3)) -> float:
    """Normalized Shannon entropy of the estimated spectral density, in [0, 1].

    The periodogram is taken at the Fourier frequencies in (0, pi], smoothed
    with successive modified-Daniell kernels (``smooth_spans``; pass an empty
    tuple for the raw periodogram), normalized to sum to one, and the entropy
    is divided by log of the number of frequencies.
    """
    x = z.values if isinstance(z, StandardizedSeries) else np.asarray(z, dtype=np.float64)
    n = x.size
    if n < 16:
        raise TooShort(f"spectral entropy needs length >= 16, got {n}")
    xc = x - x.mean()
    if not np.any(xc):
        raise ZeroVariance("spectral entropy undefined for a constant series")
    pgram = np.abs(np.fft.rfft(xc)[1:]) ** 2  # drop the zero frequency
    for span in smooth_spans or ():
        pgram = _modified_daniell(pgram, span)
    probs = pgram / pgram.sum()
    probs = probs[probs > 0.0]
    return float(-(probs @ np.log(probs)) / np.log(pgram.size))
