"""Command-line front end tying ingestion, extraction and analyses together.

Subcommands: extract | correlate | importance | crossval | report. Every
command is a pure function of (inputs, config): reruns with the same seed and
inputs produce byte-identical output files. ``--synthetic`` generates the
bundled 60-catchment synthetic dataset so the whole pipeline runs without
external data.

Exit codes: 0 success, 2 input error, 3 extraction error, 4 config error.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime
import json
import logging
import os
import sys
from pathlib import Path

from . import synthetic
from .dataio import IngestConfig, assemble_rows, read_attributes
from .dataio import load_dataset as _load_dataset
from .decomposition import PERIODIC
from .engine import FeatureConfig, FeatureRow, read_feature_table, write_feature_table
from .errors import (
    ConfigError,
    ExtractionFailed,
    FlowRegionError,
    IncompleteRecord,
    ParseError,
    UnknownAttribute,
)
from .forest import ForestParams
from .regional import (
    GROUP_NAMES,
    correlation_matrix,
    evaluate_all,
    feature_summary,
    importance_all,
    write_correlations,
    write_evaluation,
    write_importance,
    write_pred_vs_obs,
    write_summaries,
)
from .seeding import child_seed

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_EXTRACTION = 3
EXIT_CONFIG = 4


@dataclasses.dataclass
class RunConfig:
    command: str
    series_dir: Path | None
    attributes_file: Path | None
    output_dir: Path
    seed: int = 42
    trees: int = 2000
    folds: int = 10
    period: int = 365
    workers: int = 1
    groups: tuple[str, ...] = GROUP_NAMES
    policy: str = "drop"
    synthetic: bool = False
    synthetic_catchments: int = 60
    synthetic_years: int = 10
    start: datetime.date = datetime.date(1980, 1, 1)
    end: datetime.date = datetime.date(2013, 12, 31)
    log_transform: bool = False
    seasonal_span: int | str = PERIODIC
    trend_span: int | None = None
    lowpass_span: int | None = None
    entropy_spans: tuple[int, ...] = (3, 3)

    def validate(self) -> None:
        if self.trees < 1:
            raise ConfigError(f"trees must be >= 1, got {self.trees}")
        if self.folds < 2:
            raise ConfigError(f"folds must be >= 2, got {self.folds}")
        if self.period < 2:
            raise ConfigError(f"period must be >= 2, got {self.period}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        bad = [g for g in self.groups if g not in GROUP_NAMES]
        if bad:
            raise ConfigError(
                f"unknown group(s) {', '.join(bad)}; choose from {', '.join(GROUP_NAMES)}"
            )
        if self.synthetic_catchments < 1 or self.synthetic_years < 1:
            raise ConfigError("synthetic dataset size must be positive")
        if not self.synthetic:
            if self.series_dir is None or self.attributes_file is None:
                raise ConfigError(
                    "--series-dir and --attributes are required without --synthetic"
                )

    def feature_config(self) -> FeatureConfig:
        return FeatureConfig(
            entropy_spans=self.entropy_spans,
            seasonal_span=self.seasonal_span,
            trend_span=self.trend_span,
            lowpass_span=self.lowpass_span,
        )

    def ingest_config(self) -> IngestConfig:
        return IngestConfig(
            start=self.start,
            end=self.end,
            period=self.period,
            log_transform=self.log_transform,
            policy=self.policy,
            workers=self.workers,
            feature_config=self.feature_config(),
        )

    def forest_params(self) -> ForestParams:
        return ForestParams(n_trees=self.trees)

    def echo(self) -> dict:
        payload = dataclasses.asdict(self)
        for key, value in payload.items():
            if isinstance(value, (Path, datetime.date)):
                payload[key] = str(value)
            elif isinstance(value, tuple):
                payload[key] = list(value)
        return payload


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowregion",
        description="Feature-based streamflow regionalization pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("extract", "extract the 28-feature table from daily series"),
        ("correlate", "Spearman correlations of predictors vs streamflow features"),
        ("importance", "random-forest permutation importance per streamflow feature"),
        ("crossval", "cross-validated RMSE over the seven predictor groups"),
        ("report", "distribution summaries of every feature"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--series-dir", type=Path, default=None)
        cmd.add_argument("--attributes", type=Path, default=None)
        cmd.add_argument("--out", type=Path, required=True)
        cmd.add_argument("--seed", type=int, default=42)
        cmd.add_argument("--trees", type=int, default=2000)
        cmd.add_argument("--folds", type=int, default=10)
        cmd.add_argument("--period", type=int, default=365)
        cmd.add_argument("--workers", type=int, default=max(1, os.cpu_count() or 1))
        cmd.add_argument("--group", action="append", choices=GROUP_NAMES,
                         help="restrict crossval to named predictor groups")
        policy = cmd.add_mutually_exclusive_group()
        policy.add_argument("--strict", dest="policy", action="store_const",
                            const="strict", help="fail the run on any bad record")
        policy.add_argument("--drop", dest="policy", action="store_const",
                            const="drop", help="drop bad records with a logged reason")
        cmd.set_defaults(policy="drop")
        cmd.add_argument("--synthetic", action="store_true",
                         help="generate and use the bundled synthetic dataset")
        cmd.add_argument("--synthetic-catchments", type=int, default=60)
        cmd.add_argument("--synthetic-years", type=int, default=10)
        cmd.add_argument("--start", type=datetime.date.fromisoformat,
                         default=datetime.date(1980, 1, 1))
        cmd.add_argument("--end", type=datetime.date.fromisoformat,
                         default=datetime.date(2013, 12, 31))
        cmd.add_argument("--log-transform", action="store_true",
                         help="apply base-10 log to the log_ attributes on read")
        cmd.add_argument("--seasonal-span", default=PERIODIC)
        cmd.add_argument("--trend-span", type=int, default=None)
        cmd.add_argument("--lowpass-span", type=int, default=None)
        cmd.add_argument("--entropy-spans", default="3,3",
                         help="comma-separated Daniell spans; empty disables smoothing")
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    seasonal = args.seasonal_span
    if seasonal != PERIODIC:
        try:
            seasonal = int(seasonal)
        except ValueError:
            raise ConfigError(
                f"--seasonal-span must be an integer or {PERIODIC!r}, got {seasonal!r}"
            ) from None
    try:
        spans = tuple(int(s) for s in args.entropy_spans.split(",") if s.strip())
    except ValueError:
        raise ConfigError(f"bad --entropy-spans {args.entropy_spans!r}") from None
    cfg = RunConfig(
        command=args.command,
        series_dir=args.series_dir,
        attributes_file=args.attributes,
        output_dir=args.out,
        seed=args.seed,
        trees=args.trees,
        folds=args.folds,
        period=args.period,
        workers=args.workers,
        groups=tuple(args.group) if args.group else GROUP_NAMES,
        policy=args.policy,
        synthetic=args.synthetic,
        synthetic_catchments=args.synthetic_catchments,
        synthetic_years=args.synthetic_years,
        start=args.start,
        end=args.end,
        log_transform=args.log_transform,
        seasonal_span=seasonal,
        trend_span=args.trend_span,
        lowpass_span=args.lowpass_span,
        entropy_spans=spans,
    )
    cfg.validate()
    return cfg


def _prepare_inputs(cfg: RunConfig) -> RunConfig:
    """Resolve input paths, generating the synthetic dataset when asked."""
    if cfg.synthetic:
        series_dir = cfg.series_dir or cfg.output_dir / "synthetic_data"
        attributes = cfg.attributes_file or series_dir / "attributes.csv"
        spec = synthetic.SyntheticSpec(
            n_catchments=cfg.synthetic_catchments,
            n_years=cfg.synthetic_years,
            period=cfg.period,
        )
        synthetic.generate(series_dir, attributes,
                           seed=child_seed(cfg.seed, "synthetic"), spec=spec)
        first = datetime.date(spec.start_year, 1, 1)
        last = datetime.date(spec.start_year + spec.n_years - 1, 12, 31)
        return dataclasses.replace(cfg, series_dir=series_dir,
                                   attributes_file=attributes,
                                   start=first, end=last)
    if not Path(cfg.attributes_file).exists():
        raise ParseError(f"attributes file not found: {cfg.attributes_file}")
    if not Path(cfg.series_dir).is_dir():
        raise ParseError(f"series directory not found: {cfg.series_dir}")
    return cfg


def _echo_config(cfg: RunConfig) -> None:
    with open(cfg.output_dir / "config.json", "w", encoding="utf-8",
              newline="\n") as fh:
        json.dump(cfg.echo(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _extract_records(cfg: RunConfig):
    records, exclusions = _load_dataset(cfg.series_dir, cfg.attributes_file,
                                        cfg.ingest_config())
    rows = [
        FeatureRow(r.catchment_id, variable, r.features(variable))
        for r in records
        for variable in ("precipitation", "streamflow", "temperature")
    ]
    rows.sort(key=lambda row: (row.catchment_id, row.variable))
    write_feature_table(cfg.output_dir / "features.csv", rows)
    with open(cfg.output_dir / "exclusions.csv", "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write("catchment_id,variable,reason\n")
        for exc in exclusions:
            fh.write(f"{exc.catchment_id},{exc.variable},{exc.reason}\n")
    return records


def _obtain_records(cfg: RunConfig):
    """Reuse an existing features.csv when possible, else extract on the fly."""
    features_path = cfg.output_dir / "features.csv"
    if cfg.synthetic and cfg.attributes_file is None:
        default_attrs = (cfg.series_dir or cfg.output_dir / "synthetic_data") / "attributes.csv"
    else:
        default_attrs = cfg.attributes_file
    if features_path.exists() and default_attrs and Path(default_attrs).exists():
        rows = read_feature_table(features_path)
        attributes = read_attributes(default_attrs, cfg.log_transform)
        records = assemble_rows(rows, attributes)
        if records:
            return records
    cfg = _prepare_inputs(cfg)
    return _extract_records(cfg)


def cmd_extract(cfg: RunConfig) -> int:
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    _echo_config(cfg)
    _extract_records(_prepare_inputs(cfg))
    return EXIT_OK


def cmd_correlate(cfg: RunConfig) -> int:
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    _echo_config(cfg)
    records = _obtain_records(cfg)
    write_correlations(cfg.output_dir / "correlations.csv",
                       correlation_matrix(records))
    return EXIT_OK


def cmd_importance(cfg: RunConfig) -> int:
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    _echo_config(cfg)
    records = _obtain_records(cfg)
    reports = importance_all(records, cfg.forest_params(), seed=cfg.seed,
                             workers=cfg.workers)
    write_importance(cfg.output_dir / "importance.csv", reports)
    return EXIT_OK


def cmd_crossval(cfg: RunConfig) -> int:
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    _echo_config(cfg)
    records = _obtain_records(cfg)
    report = evaluate_all(records, cfg.forest_params(), seed=cfg.seed,
                          k=cfg.folds, groups=cfg.groups, workers=cfg.workers)
    write_evaluation(cfg.output_dir / "evaluation.json", report)
    write_pred_vs_obs(cfg.output_dir / "pred_vs_obs.csv", report)
    return EXIT_OK


def cmd_report(cfg: RunConfig) -> int:
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    _echo_config(cfg)
    records = _obtain_records(cfg)
    write_summaries(cfg.output_dir / "summaries.csv", feature_summary(records))
    return EXIT_OK


_COMMANDS = {
    "extract": cmd_extract,
    "correlate": cmd_correlate,
    "importance": cmd_importance,
    "crossval": cmd_crossval,
    "report": cmd_report,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args = _parser().parse_args(argv)
        cfg = _config_from_args(args)
        return _COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, UnknownAttribute, IncompleteRecord, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ExtractionFailed as exc:
        print(f"extraction error: {exc}", file=sys.stderr)
        return EXIT_EXTRACTION
    except FlowRegionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXTRACTION


if __name__ == "__main__":
    sys.exit(main())
