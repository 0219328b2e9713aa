"""End-to-end orchestration: config parsing, stage wiring and output files.

A run config is a single JSON document:

    {
      "datasets": [
        {"dataset_id": "synthetic",
         "synthetic": {"n_households": 5, "days": 120, "seed": 7}},
        {"dataset_id": "lothian", "csv_path": "data/lothian.csv",
         "split_overrides": {"q_max": 0.5}}
      ],
      "models": [
        {"model_id": "SeasonalAverage", "kind": "Baseline"},
        {"model_id": "mock", "kind": "ZeroShot", "transport": "Subprocess",
         "command": ["model-server", "--stdio", "--model", "mock"]}
      ],
      "baseline_model_id": "SeasonalAverage",
      "backtest": {"input_sizes": [24], "horizons": [24],
                   "calibration_days": 365, "max_failure_rate": 0.01},
      "output_dir": "out"
    }
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import backtest as bt
from . import figures, metrics, preprocess, report
from . import split as splitting
from .core import compute_stats, parse_timestamp
from .errors import ConfigError, LoadBenchError
from .ingest import Dataset, SplitOverrides, generate_synthetic, parse_canonical_csv, summarize
from .models import (
    AdapterForecaster,
    ForecasterDescriptor,
    LoopbackTransport,
    SeasonalAverageForecaster,
    SubprocessTransport,
    TcpTransport,
    make_reference_handler,
    validate_descriptor,
)

log = logging.getLogger(__name__)

RUN_OUTPUTS = [
    "summary.csv", "preprocess_report.csv", "split_specs.csv", "audit.csv",
    "records.csv", "metrics.csv", "table6.csv", "table7.csv",
    "table6.txt", "table7.txt", "heatmap.csv", "heatmap.png",
]
EDA_OUTPUTS = [
    "summary.csv", "eda_profiles.csv", "acf.csv",
    "hourly_profile.png", "monthly_profile.png", "acf.png",
]
SPLIT_OUTPUTS = ["split_specs.csv", "audit.csv"]
REPORT_OUTPUTS = [
    "metrics.csv", "table6.csv", "table7.csv", "table6.txt", "table7.txt",
    "heatmap.csv", "heatmap.png",
]


@dataclass
class DatasetConfig:
    dataset_id: str
    csv_path: str | None = None
    synthetic: dict | None = None
    split_overrides: SplitOverrides = field(default_factory=SplitOverrides)


@dataclass
class ModelConfig:
    descriptor: ForecasterDescriptor
    command: list[str] | None = None
    host: str = "127.0.0.1"
    port: int | None = None
    timeout: float = 60.0


@dataclass
class RunConfig:
    datasets: list[DatasetConfig]
    models: list[ModelConfig]
    backtest: bt.BacktestConfig
    output_dir: Path
    baseline_model_id: str = "SeasonalAverage"
    seed: int | None = None


def _field(raw: dict, name: str, required=False, default=None):
    if name in raw:
        return raw[name]
    if required:
        raise ConfigError(f"missing required field {name!r}")
    return default


def load_config(path, seed: int | None = None, output_dir=None) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None

    datasets = []
    for entry in _field(raw, "datasets", required=True):
        overrides = entry.get("split_overrides", {})
        try:
            so = SplitOverrides(
                q_max=overrides.get("q_max"), q_split=overrides.get("q_split")
            )
        except ValueError as exc:
            raise ConfigError(f"datasets[].split_overrides: {exc}") from None
        if ("csv_path" in entry) == ("synthetic" in entry):
            raise ConfigError(
                f"dataset {entry.get('dataset_id')!r}: exactly one of csv_path "
                "or synthetic is required"
            )
        datasets.append(
            DatasetConfig(
                dataset_id=_field(entry, "dataset_id", required=True),
                csv_path=entry.get("csv_path"),
                synthetic=entry.get("synthetic"),
                split_overrides=so,
            )
        )
    if not datasets:
        raise ConfigError("datasets must not be empty")

    models = []
    for entry in _field(raw, "models", required=True):
        cutoff = entry.get("training_cutoff")
        try:
            desc = ForecasterDescriptor(
                model_id=_field(entry, "model_id", required=True),
                kind=entry.get("kind", "Baseline"),
                transport=entry.get("transport", "InProcess"),
                training_cutoff=parse_timestamp(cutoff) if cutoff else None,
                pretraining_corpora=entry.get("pretraining_corpora", ""),
            )
        except (ValueError, LoadBenchError) as exc:
            raise ConfigError(f"models[]: {exc}") from None
        models.append(
            ModelConfig(
                descriptor=desc,
                command=entry.get("command"),
                host=entry.get("host", "127.0.0.1"),
                port=entry.get("port"),
                timeout=entry.get("timeout", 60.0),
            )
        )
    if not models:
        raise ConfigError("models must not be empty")

    raw_bt = raw.get("backtest", {})
    try:
        bt_config = bt.BacktestConfig(
            input_sizes=tuple(raw_bt.get("input_sizes", bt.DEFAULT_INPUT_SIZES)),
            horizons=tuple(raw_bt.get("horizons", bt.DEFAULT_HORIZONS)),
            calibration_days=raw_bt.get("calibration_days", bt.DEFAULT_CALIBRATION_DAYS),
            max_failure_rate=raw.get("max_failure_rate", raw_bt.get("max_failure_rate", 0.01)),
        )
    except ValueError as exc:
        raise ConfigError(f"backtest: {exc}") from None

    out = Path(output_dir) if output_dir else Path(_field(raw, "output_dir", required=True))
    return RunConfig(
        datasets=datasets,
        models=models,
        backtest=bt_config,
        output_dir=out,
        baseline_model_id=raw.get("baseline_model_id", "SeasonalAverage"),
        seed=seed,
    )


def load_datasets(config: RunConfig) -> dict[str, Dataset]:
    datasets = {}
    for dc in config.datasets:
        if dc.synthetic is not None:
            spec = dict(dc.synthetic)
            if config.seed is not None:
                spec["seed"] = config.seed
            elif "seed" not in spec:
                spec["seed"] = 0
            dataset = generate_synthetic(
                n_households=int(spec.get("n_households", 5)),
                days=int(spec.get("days", 120)),
                seed=int(spec["seed"]),
                dataset_id=dc.dataset_id,
            )
        else:
            csv_path = Path(dc.csv_path)
            if not csv_path.exists():
                raise ConfigError(f"dataset {dc.dataset_id}: file not found: {csv_path}")
            with open(csv_path, encoding="utf-8") as fh:
                dataset = parse_canonical_csv(fh, dataset_id=dc.dataset_id)
        datasets[dc.dataset_id] = dataset
    return datasets


def build_forecaster(mc: ModelConfig):
    desc = mc.descriptor
    if desc.kind == "Baseline":
        return SeasonalAverageForecaster(model_id=desc.model_id)
    if desc.transport == "InProcess":
        transport = LoopbackTransport(
            make_reference_handler(model_id=desc.model_id, kind=desc.kind)
        )
    elif desc.transport == "Subprocess":
        if not mc.command:
            raise ConfigError(f"model {desc.model_id}: Subprocess transport needs a command")
        transport = SubprocessTransport(mc.command)
    else:
        if mc.port is None:
            raise ConfigError(f"model {desc.model_id}: Socket transport needs a port")
        transport = TcpTransport(mc.host, mc.port, timeout=mc.timeout)
    return AdapterForecaster(desc, transport, timeout=mc.timeout)


@dataclass
class SplitStage:
    splits: dict[str, splitting.SplitResult]  # preprocessed train sides
    raw_tests: dict[str, dict[str, "object"]]
    audit: splitting.AuditReport
    preprocess_reports: list[preprocess.PreprocessReport]
    stats: dict[tuple[str, str], "object"]


def run_split_stage(config: RunConfig, datasets: dict[str, Dataset]) -> SplitStage:
    results = []
    for dc in config.datasets:
        dataset = datasets[dc.dataset_id]
        spec = splitting.compute_split_date(
            dataset,
            q_max=dc.split_overrides.q_max or splitting.DEFAULT_Q_MAX,
            q_split=dc.split_overrides.q_split or splitting.DEFAULT_Q_SPLIT,
        )
        results.append(splitting.apply_split(dataset, spec))
    results = splitting.trim_cross_dataset_overlap(results)

    raw_tests = {
        r.dataset_id: {
            hid: hs.test for hid, hs in r.households.items() if hs.test is not None
        }
        for r in results
    }

    reports = []
    stats = {}
    for r in results:
        for hid, hs in r.households.items():
            if hs.train is None:
                continue
            try:
                cleaned, rep = preprocess.preprocess_training_series(hs.train)
            except LoadBenchError as exc:
                log.warning("preprocess skipped %s/%s: %s", r.dataset_id, hid, exc)
                hs.train = None
                continue
            hs.train = cleaned
            reports.append(rep)
            stats[(r.dataset_id, hid)] = compute_stats(cleaned.values)
        # mid-test entrants have no training data; scale on their test actuals
        # so their records remain comparable
        for hid, hs in r.households.items():
            if (r.dataset_id, hid) not in stats and hs.test is not None:
                if hs.test.n_present:
                    stats[(r.dataset_id, hid)] = compute_stats(hs.test.values)

    descriptors = [m.descriptor for m in config.models]
    audit = splitting.audit_leakage(results, descriptors)
    return SplitStage(
        splits={r.dataset_id: r for r in results},
        raw_tests=raw_tests,
        audit=audit,
        preprocess_reports=reports,
        stats=stats,
    )


def write_eda_outputs(datasets: dict[str, Dataset], out: Path) -> None:
    with open(out / "summary.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("dataset_id,n_households,start,end,mean,median,std\n")
        for ds_id in sorted(datasets):
            s = summarize(datasets[ds_id])
            from .core import format_timestamp

            fh.write(
                f"{s.dataset_id},{s.n_households},{format_timestamp(s.start)},"
                f"{format_timestamp(s.end)},{s.mean!r},{s.median!r},{s.std!r}\n"
            )
    first = datasets[sorted(datasets)[0]]
    with open(out / "eda_profiles.csv", "w", encoding="utf-8", newline="\n") as fh:
        report.write_profiles_csv(first, fh)
    acfs = []
    for ds_id in sorted(datasets):
        for hid in datasets[ds_id].household_ids:
            series = datasets[ds_id].series[hid]
            try:
                acfs.append(report.autocorrelation(series))
            except LoadBenchError:
                continue
    with open(out / "acf.csv", "w", encoding="utf-8", newline="\n") as fh:
        report.write_acf_csv(acfs, fh)
    figures.render_hourly_profile(report.hourly_profile(first), out / "hourly_profile.png")
    figures.render_monthly_profile(
        report.monthly_hourly_profile(first), out / "monthly_profile.png"
    )
    figures.render_acf(acfs, out / "acf.png")


def write_split_outputs(stage: SplitStage, out: Path) -> None:
    with open(out / "split_specs.csv", "w", encoding="utf-8", newline="\n") as fh:
        splitting.write_specs_csv([r.spec for r in stage.splits.values()], fh)
    with open(out / "audit.csv", "w", encoding="utf-8", newline="\n") as fh:
        splitting.write_audit_csv(stage.audit, fh)


def write_report_outputs(results, out: Path, baseline_model_id: str) -> None:
    with open(out / "metrics.csv", "w", encoding="utf-8", newline="\n") as fh:
        metrics.write_metrics_csv(results, fh)
    t6 = report.table6_rows(results)
    t7 = report.table7_rows(results)
    cells = report.heatmap_cells(results, baseline_model_id)
    with open(out / "table6.csv", "w", encoding="utf-8", newline="\n") as fh:
        report.write_rows_csv(t6, fh)
    with open(out / "table7.csv", "w", encoding="utf-8", newline="\n") as fh:
        report.write_rows_csv(t7, fh)
    (out / "table6.txt").write_text(report.format_table(t6), encoding="utf-8")
    (out / "table7.txt").write_text(report.format_table(t7), encoding="utf-8")
    with open(out / "heatmap.csv", "w", encoding="utf-8", newline="\n") as fh:
        report.write_heatmap_csv(cells, fh)
    figures.render_heatmap(cells, out / "heatmap.png", baseline_id=baseline_model_id)


def run_pipeline(config: RunConfig, workers: int = 1) -> splitting.AuditReport:
    """Full run: ingest, preprocess, split, trim, audit, backtest, metrics,
    report. Raises on stage errors; RunAborted propagates to the caller."""
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)

    datasets = load_datasets(config)
    write_eda_outputs(datasets, out)

    stage = run_split_stage(config, datasets)
    write_split_outputs(stage, out)
    with open(out / "preprocess_report.csv", "w", encoding="utf-8", newline="\n") as fh:
        preprocess.write_reports_csv(stage.preprocess_reports, fh)

    for mc in config.models:
        for r in stage.splits.values():
            for warning in validate_descriptor(mc.descriptor, r.spec):
                log.info("descriptor check: %s", warning)

    forecasters = [build_forecaster(mc) for mc in config.models]
    try:
        records = bt.run_backtest(
            stage.splits, stage.raw_tests, forecasters, config.backtest, workers=workers
        )
    finally:
        for f in forecasters:
            try:
                f.close()
            except Exception:
                pass

    with open(out / "records.csv", "w", encoding="utf-8", newline="\n") as fh:
        bt.write_records_csv(records, fh)

    scaled = metrics.scale_records(records, stage.stats)
    results = metrics.aggregate(scaled)
    write_report_outputs(results, out, config.baseline_model_id)

    manifest = {"outputs": sorted(set(RUN_OUTPUTS + EDA_OUTPUTS))}
    (out / "run_manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    return stage.audit
