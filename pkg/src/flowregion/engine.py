"""Orchestration of the 28-feature vector and batch extraction over catchments."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import decomposition, dependence, distributional
from .errors import ExtractionFailed, FlowRegionError
from .series import TimeSeries, standardize, validate

logger = logging.getLogger(__name__)

#: Canonical feature order; every downstream matrix is column-stable in it.
FEATURE_NAMES = (
    "x_acf1", "x_acf10", "diff1_acf1", "diff1_acf10", "diff2_acf1",
    "diff2_acf10", "seas_acf1", "firstzero_ac", "x_pacf5", "diff1x_pacf5",
    "diff2x_pacf5", "seas_pacf", "std1st_der", "crossing_points", "entropy",
    "flat_spots", "lumpiness", "stability", "nonlinearity", "trend", "spike",
    "linearity", "curvature", "e_acf1", "e_acf10", "seasonal_strength",
    "peak", "trough",
)

#: Count-valued features stored as reals; integrality is asserted on build.
INTEGER_FEATURES = frozenset(
    {"firstzero_ac", "crossing_points", "flat_spots", "peak", "trough"}
)

_INDEX = {name: i for i, name in enumerate(FEATURE_NAMES)}


@dataclass
class FeatureConfig:
    """Estimator knobs; the defaults are the pinned conventions."""

    entropy_spans: tuple[int, ...] = (3, 3)
    firstzero_scan_factor: int = 2
    tile_width: int | None = None  # None -> seasonal period
    seasonal_span: int | str = decomposition.PERIODIC
    trend_span: int | None = None  # None -> 2 * period + 1
    lowpass_span: int | None = None  # None -> next odd >= period
    stl_inner_iterations: int = 2
    stl_outer_iterations: int = 0
    shape_harmonics: int = 2  # Fourier smoothing of the seasonal shape for peak/trough


@dataclass
class FeatureVector:
    """The 28 named feature values of one series, in canonical order."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(FEATURE_NAMES),):
            raise ValueError(
                f"expected {len(FEATURE_NAMES)} feature values, got {self.values.shape}"
            )
        if not np.isfinite(self.values).all():
            bad = [FEATURE_NAMES[i] for i in np.flatnonzero(~np.isfinite(self.values))]
            raise ValueError(f"non-finite feature value(s): {', '.join(bad)}")
        for name in INTEGER_FEATURES:
            v = self.values[_INDEX[name]]
            if v != np.floor(v):
                raise ValueError(f"{name} must be integral, got {v!r}")

    @classmethod
    def from_dict(cls, mapping: dict[str, float]) -> "FeatureVector":
        missing = [n for n in FEATURE_NAMES if n not in mapping]
        if missing:
            raise ValueError(f"missing feature(s): {', '.join(missing)}")
        extra = set(mapping) - set(FEATURE_NAMES)
        if extra:
            raise ValueError(f"unknown feature(s): {', '.join(sorted(extra))}")
        return cls(np.array([mapping[n] for n in FEATURE_NAMES]))

    def __getitem__(self, name: str) -> float:
        return float(self.values[_INDEX[name]])

    def as_dict(self) -> dict[str, float]:
        return {n: float(v) for n, v in zip(FEATURE_NAMES, self.values)}


def _step(label: str, fn):
    try:
        return fn()
    except FlowRegionError as exc:
        if isinstance(exc, ExtractionFailed):
            raise
        raise ExtractionFailed(label, exc) from exc


def extract_features(series: TimeSeries, config: FeatureConfig | None = None) -> FeatureVector:
    """Compute all 28 features of one series.

    The series is validated and standardized once; every feature is computed
    from the standardized values. Deterministic for a fixed input and config.
    Upstream errors are re-raised as ExtractionFailed naming the feature.
    """
    cfg = config or FeatureConfig()
    z = _step("standardize", lambda: standardize(validate(series)))
    out: dict[str, float] = {}
    out.update(_step("acf features", lambda: dependence.acf_feature_set(
        z, scan_factor=cfg.firstzero_scan_factor)))
    out.update(_step("pacf features", lambda: dependence.pacf_feature_set(z)))
    out["std1st_der"] = _step("std1st_der", lambda: distributional.std1st_der(z))
    out["crossing_points"] = _step(
        "crossing_points", lambda: float(distributional.crossing_points(z)))
    out["entropy"] = _step("entropy", lambda: dependence.spectral_entropy(
        z, smooth_spans=cfg.entropy_spans))
    out["flat_spots"] = _step("flat_spots", lambda: float(distributional.flat_spots(z)))
    out.update(_step("tiled stats", lambda: distributional.tiled_stats(
        z, width=cfg.tile_width)))
    out["nonlinearity"] = _step("nonlinearity", lambda: distributional.nonlinearity(z))
    out.update(_step("decomposition features", lambda: decomposition.stl_feature_set(
        z,
        shape_harmonics=cfg.shape_harmonics,
        seasonal_span=cfg.seasonal_span,
        trend_span=cfg.trend_span,
        lowpass_span=cfg.lowpass_span,
        inner_iterations=cfg.stl_inner_iterations,
        outer_iterations=cfg.stl_outer_iterations,
    ).as_dict()))
    return FeatureVector.from_dict(out)


@dataclass
class FeatureRow:
    catchment_id: str
    variable: str
    features: FeatureVector


@dataclass
class Exclusion:
    catchment_id: str
    variable: str
    reason: str


def _extract_task(args):
    catchment_id, variable, series, cfg = args
    try:
        return catchment_id, variable, extract_features(series, cfg), None
    except ExtractionFailed as exc:
        cause = exc.cause if exc.cause is not None else exc
        reason = f"{type(cause).__name__} in {exc.feature}: {cause}"
        return catchment_id, variable, None, reason
    except FlowRegionError as exc:
        return catchment_id, variable, None, f"{type(exc).__name__}: {exc}"


def extract_batch(
    tasks,
    config: FeatureConfig | None = None,
    workers: int = 1,
    policy: str = "strict",
) -> tuple[list[FeatureRow], list[Exclusion]]:
    """Extract features for many (catchment, variable, series) tasks.

    Output rows are sorted by (catchment id, variable) and identical
    regardless of worker count. Under policy="strict" any failure raises;
    under policy="drop" failing records become logged exclusions.
    """
    if policy not in ("strict", "drop"):
        raise ValueError(f"unknown batch policy {policy!r}")
    ordered = sorted(tasks, key=lambda t: (t[0], t[1]))
    payload = [(cid, var, series, config) for cid, var, series in ordered]
    if workers > 1 and len(payload) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_extract_task, payload, chunksize=4))
    else:
        results = [_extract_task(item) for item in payload]
    rows: list[FeatureRow] = []
    exclusions: list[Exclusion] = []
    for cid, var, features, failure in results:
        if failure is None:
            rows.append(FeatureRow(cid, var, features))
        else:
            exclusions.append(Exclusion(cid, var, failure))
    if exclusions and policy == "strict":
        summary = "; ".join(
            f"{e.catchment_id}/{e.variable}: {e.reason}" for e in exclusions
        )
        raise ExtractionFailed(f"{len(exclusions)} record(s) failed", summary)
    for exc in exclusions:
        logger.warning("dropping %s/%s: %s", exc.catchment_id, exc.variable,
                       exc.reason)
    return rows, exclusions


def write_feature_table(path, rows: list[FeatureRow]) -> None:
    """Serialize feature rows as delimited text with round-trip precision."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("catchment_id,variable," + ",".join(FEATURE_NAMES) + "\n")
        for row in rows:
            values = ",".join(repr(float(v)) for v in row.features.values)
            fh.write(f"{row.catchment_id},{row.variable},{values}\n")


def read_feature_table(path) -> list[FeatureRow]:
    """Parse a feature table written by :func:`write_feature_table`."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        expected = ["catchment_id", "variable", *FEATURE_NAMES]
        if header != expected:
            raise ValueError(f"unexpected feature table header in {path}")
        rows = []
        for line in fh:
            parts = line.rstrip("\n").split(",")
            rows.append(FeatureRow(
                catchment_id=parts[0],
                variable=parts[1],
                features=FeatureVector(np.array([float(v) for v in parts[2:]])),
            ))
    return rows
