"""Command-line front door.

Subcommands: run (full pipeline), eda (profiles/ACF/summaries), split
(split specs + leakage audit), report (re-aggregate an existing records
file). Exit codes: 0 success, 1 config/validation error, 2 aborted run.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import backtest as bt
from . import metrics, pipeline
from .errors import ConfigError, LoadBenchError, RunAborted

log = logging.getLogger("loadbench")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loadbench",
        description="Household load forecasting benchmark harness",
    )
    parser.add_argument("--verbose", "-v", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="run configuration (JSON)")
        p.add_argument("--output", help="override the config's output directory")
        p.add_argument("--seed", type=int, help="override synthetic dataset seeds")

    p_run = sub.add_parser("run", help="execute the full pipeline")
    common(p_run)
    p_run.add_argument("--workers", type=int, default=1)

    p_eda = sub.add_parser("eda", help="dataset summaries, profiles and ACF only")
    common(p_eda)

    p_split = sub.add_parser("split", help="split specs and leakage audit only")
    common(p_split)

    p_report = sub.add_parser("report", help="re-aggregate an existing records file")
    common(p_report)
    p_report.add_argument("--records", help="records CSV (default: <output>/records.csv)")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = pipeline.load_config(args.config, seed=args.seed, output_dir=args.output)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 1

    try:
        if args.command == "run":
            audit = pipeline.run_pipeline(config, workers=args.workers)
            log.info("leakage audit: %s", "PASS" if audit.passed else "FAIL")
            return 0
        if args.command == "eda":
            config.output_dir.mkdir(parents=True, exist_ok=True)
            datasets = pipeline.load_datasets(config)
            pipeline.write_eda_outputs(datasets, config.output_dir)
            return 0
        if args.command == "split":
            config.output_dir.mkdir(parents=True, exist_ok=True)
            datasets = pipeline.load_datasets(config)
            stage = pipeline.run_split_stage(config, datasets)
            pipeline.write_split_outputs(stage, config.output_dir)
            log.info("leakage audit: %s", "PASS" if stage.audit.passed else "FAIL")
            return 0
        if args.command == "report":
            records_path = Path(args.records or config.output_dir / "records.csv")
            if not records_path.exists():
                log.error("records file not found: %s", records_path)
                return 1
            config.output_dir.mkdir(parents=True, exist_ok=True)
            with open(records_path, encoding="utf-8") as fh:
                records = bt.read_records_csv(fh)
            datasets = pipeline.load_datasets(config)
            stage = pipeline.run_split_stage(config, datasets)
            scaled = metrics.scale_records(records, stage.stats)
            results = metrics.aggregate(scaled)
            pipeline.write_report_outputs(
                results, config.output_dir, config.baseline_model_id
            )
            return 0
    except RunAborted as exc:
        log.error("run aborted: %s", exc)
        return 2
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 1
    except LoadBenchError as exc:
        log.error("pipeline error: %s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
