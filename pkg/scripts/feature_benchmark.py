#!/usr/bin/env python3
"""Timing and sanity benchmark of the 28-feature extraction.

Extracts the full feature vector from a few canonical series shapes (white
noise, AR(1), seasonal, trending) at the production length of 12,410 daily
points and reports per-series wall time plus a handful of headline values.

Usage:
    python scripts/feature_benchmark.py [--length N]
"""

import argparse
import time

import numpy as np

from flowregion.engine import extract_features
from flowregion.series import TimeSeries


def ar1(n, phi, rng):
    eps = rng.normal(size=n)
    out = np.empty(n)
    out[0] = eps[0] / np.sqrt(1 - phi * phi)
    for t in range(1, n):
        out[t] = phi * out[t - 1] + eps[t]
    return out


def build_cases(n, rng):
    t = np.arange(1, n + 1)
    return {
        "white noise": rng.normal(size=n),
        "AR(1) phi=0.8": ar1(n, 0.8, rng),
        "seasonal": np.sin(2 * np.pi * t / 365) + 0.2 * rng.normal(size=n),
        "trending": 2.0 * t / n + 0.3 * rng.normal(size=n),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--length", type=int, default=12410)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    headline = ("x_acf1", "entropy", "seasonal_strength", "trend", "stability")
    for name, values in build_cases(args.length, rng).items():
        start = time.perf_counter()
        fv = extract_features(TimeSeries(values))
        elapsed = time.perf_counter() - start
        shown = ", ".join(f"{k}={fv[k]:.3f}" for k in headline)
        print(f"{name:<14} {elapsed * 1000:7.1f} ms  {shown}")


if __name__ == "__main__":
    main()
