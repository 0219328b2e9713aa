"""Canonical CSV ingestion, sub-hourly resampling, synthetic data generation
and dataset summaries.

Canonical format: header ``dataset_id,household_id,timestamp,kwh``, timestamps
``YYYY-MM-DDTHH:00:00Z``, empty kwh field = missing, UTF-8, LF endings, rows
in any order.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import IO, Iterable

import numpy as np

from .core import (
    MISSING,
    TimeGrid,
    TimeSeries,
    format_timestamp,
    hours_between,
    parse_timestamp,
)
from .errors import DuplicateReading, EmptyInput, ParseError

CANONICAL_HEADER = ["dataset_id", "household_id", "timestamp", "kwh"]


@dataclass(frozen=True)
class SplitOverrides:
    q_max: float | None = None
    q_split: float | None = None

    def __post_init__(self):
        for name in ("q_max", "q_split"):
            v = getattr(self, name)
            if v is not None and not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")


@dataclass(frozen=True)
class DatasetManifest:
    dataset_id: str
    csv_path: str | None = None
    split_overrides: SplitOverrides = field(default_factory=SplitOverrides)
    description: str = ""


@dataclass
class Dataset:
    dataset_id: str
    series: dict[str, TimeSeries]

    def __post_init__(self):
        for hid, ts in self.series.items():
            if hid != ts.household_id:
                raise ValueError(f"series keyed {hid} carries id {ts.household_id}")

    @property
    def household_ids(self) -> list[str]:
        return sorted(self.series)


@dataclass(frozen=True)
class DatasetSummary:
    dataset_id: str
    n_households: int
    start: datetime
    end: datetime
    mean: float
    median: float
    std: float


def parse_canonical_csv(source: IO, dataset_id: str | None = None) -> Dataset:
    """Parse canonical long-format CSV into a densified Dataset.

    Each household lands on the hourly grid between its first and last
    reading; absent hours become missing slots.
    """
    if isinstance(source, (bytes, bytearray)):
        source = io.StringIO(source.decode("utf-8"))
    elif isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty input, header row required") from None
    if [h.strip() for h in header] != CANONICAL_HEADER:
        raise ParseError(f"bad header {header!r}, expected {CANONICAL_HEADER}", line_no=1)

    ds_id = dataset_id
    readings: dict[str, dict[datetime, float]] = {}
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", line_no=line_no)
        row_ds, hid, ts_text, kwh_text = (f.strip() for f in row)
        if not row_ds or not hid:
            raise ParseError("empty dataset_id or household_id", line_no=line_no)
        if ds_id is None:
            ds_id = row_ds
        elif row_ds != ds_id:
            raise ParseError(
                f"mixed dataset ids {ds_id!r} and {row_ds!r}", line_no=line_no
            )
        try:
            ts = parse_timestamp(ts_text)
        except Exception as exc:
            raise ParseError(f"bad timestamp {ts_text!r}: {exc}", line_no=line_no) from None
        if kwh_text == "":
            value = MISSING
        else:
            try:
                value = float(kwh_text)
            except ValueError:
                raise ParseError(f"bad kwh value {kwh_text!r}", line_no=line_no) from None
            if value < 0:
                raise ValueError(f"line {line_no}: negative kwh {value} for {hid}")
        per_house = readings.setdefault(hid, {})
        if ts in per_house:
            raise DuplicateReading(
                f"duplicate reading for ({hid}, {format_timestamp(ts)})", line_no=line_no
            )
        per_house[ts] = value

    if not readings:
        raise EmptyInput("no data rows")

    series = {}
    for hid, per_house in readings.items():
        grid = TimeGrid(min(per_house), max(per_house))
        values = np.full(len(grid), MISSING)
        for ts, value in per_house.items():
            values[grid.index(ts)] = value
        series[hid] = TimeSeries(hid, grid, values)
    return Dataset(dataset_id=ds_id, series=series)


def serialize_canonical_csv(dataset: Dataset, sink: IO) -> None:
    """Inverse of parse_canonical_csv; missing slots are written as empty kwh."""
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(CANONICAL_HEADER)
    for hid in dataset.household_ids:
        ts = dataset.series[hid]
        for stamp, value in zip(ts.grid, ts.values):
            kwh = "" if np.isnan(value) else repr(float(value))
            writer.writerow([dataset.dataset_id, hid, format_timestamp(stamp), kwh])


def resample_hourly(
    readings: Iterable[tuple[datetime, float]]
) -> list[tuple[datetime, float]]:
    """Sum sub-hourly energy increments into their containing hour."""
    buckets: dict[datetime, float] = {}
    for ts, kwh in readings:
        if ts.tzinfo is None:
            ts = ts.replace(tzinfo=timezone.utc)
        hour = ts.astimezone(timezone.utc).replace(minute=0, second=0, microsecond=0)
        buckets[hour] = buckets.get(hour, 0.0) + kwh
    return sorted(buckets.items())


SYNTHETIC_EPOCH = datetime(2020, 1, 1, tzinfo=timezone.utc)


def generate_synthetic(
    n_households: int, days: int, seed: int, dataset_id: str = "synthetic"
) -> Dataset:
    """Deterministic synthetic household load: base load, daily double peak,
    weekend modulation, annual term and noise, with per-household ragged
    start/end offsets."""
    if n_households < 1:
        raise ValueError("n_households must be >= 1")
    if days < 2:
        raise ValueError("days must be >= 2")
    rng = np.random.default_rng(seed)
    total = days * 24
    series = {}
    for k in range(n_households):
        hid = f"h{k:03d}"
        max_off = max(1, total // 10)
        start_off = int(rng.integers(0, max_off))
        end_off = int(rng.integers(0, max_off))
        if total - start_off - end_off < 48:
            start_off = end_off = 0
        n = total - start_off - end_off

        t = np.arange(n) + start_off  # absolute hour index keeps phases aligned
        hour = t % 24
        weekend = ((t // 24) % 7 >= 5).astype(float)

        base = rng.uniform(0.25, 0.7)
        amp = rng.uniform(0.8, 1.4) * base
        evening = np.exp(-0.5 * ((hour - 19) / 2.5) ** 2)
        morning = np.exp(-0.5 * ((hour - 8) / 2.0) ** 2)
        daily = amp * (0.9 * evening + 0.45 * morning)
        annual = 0.15 * base * np.cos(2 * np.pi * t / 8760.0)
        noise = rng.normal(0.0, 0.08 * base, size=n)

        values = base + daily + annual + noise
        values *= 1.0 + 0.15 * weekend
        values = np.clip(values, 0.0, None)

        start = SYNTHETIC_EPOCH + timedelta(hours=start_off)
        grid = TimeGrid(start, start + timedelta(hours=n - 1))
        series[hid] = TimeSeries(hid, grid, values)
    return Dataset(dataset_id=dataset_id, series=series)


def summarize(dataset: Dataset) -> DatasetSummary:
    """Pooled statistics over all present values across households."""
    if not dataset.series:
        raise EmptyInput(f"dataset {dataset.dataset_id} has no series")
    pooled = np.concatenate([ts.present_values() for ts in dataset.series.values()])
    if len(pooled) == 0:
        raise EmptyInput(f"dataset {dataset.dataset_id} has no present values")
    starts = [ts.grid.start for ts in dataset.series.values()]
    ends = [ts.grid.end for ts in dataset.series.values()]
    return DatasetSummary(
        dataset_id=dataset.dataset_id,
        n_households=len(dataset.series),
        start=min(starts),
        end=max(ends),
        mean=float(pooled.mean()),
        median=float(np.median(pooled)),
        std=float(pooled.std()),
    )
