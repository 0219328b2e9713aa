"""Rolling-origin cross-validation: fold planning with a 365-day calibration
window, horizon-stride origin advancement, the household pickup rule and
evaluation-record generation."""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timedelta

import numpy as np

from .core import HOUR, MISSING, TimeGrid, TimeSeries, format_timestamp, hours_between, parse_timestamp
from .errors import NoTestData, RunAborted
from .split import SplitResult

log = logging.getLogger(__name__)

DEFAULT_INPUT_SIZES = (24, 96, 168)
DEFAULT_HORIZONS = (24, 96, 168)
DEFAULT_CALIBRATION_DAYS = 365


@dataclass(frozen=True)
class BacktestConfig:
    input_sizes: tuple[int, ...] = DEFAULT_INPUT_SIZES
    horizons: tuple[int, ...] = DEFAULT_HORIZONS
    calibration_days: int = DEFAULT_CALIBRATION_DAYS
    max_failure_rate: float = 0.01

    def __post_init__(self):
        if not all(h > 0 for h in (*self.input_sizes, *self.horizons)):
            raise ValueError("input sizes and horizons must be positive hours")
        if self.calibration_days <= 0:
            raise ValueError("calibration_days must be positive")


@dataclass(frozen=True)
class Fold:
    origin: datetime
    horizon: int
    calibration_days: int = DEFAULT_CALIBRATION_DAYS

    @property
    def train_start(self) -> datetime:
        return self.origin - timedelta(days=self.calibration_days)

    @property
    def forecast_end(self) -> datetime:
        return self.origin + self.horizon * HOUR


@dataclass(frozen=True)
class ForecastTask:
    household_id: str
    origin: datetime
    horizon: int
    input_values: tuple[float, ...]  # last input_size slots before origin

    @property
    def input_size(self) -> int:
        return len(self.input_values)


@dataclass(frozen=True)
class EvaluationRecord:
    dataset_id: str
    model_id: str
    household_id: str
    origin: datetime
    input_size: int
    horizon: int
    # (step, actual kWh or NaN, predicted kWh); partial tails carry fewer
    # pairs than the horizon
    pairs: tuple[tuple[int, float, float], ...]
    short_history: bool = False


def merge_timeline(train: TimeSeries | None, test: TimeSeries | None) -> TimeSeries | None:
    """Preprocessed train plus raw test on one grid; a trimmed hole between
    them stays missing."""
    if train is None and test is None:
        return None
    if train is None:
        return test
    if test is None:
        return train
    grid = TimeGrid(train.grid.start, test.grid.end)
    values = np.full(len(grid), MISSING)
    values[: len(train)] = train.values
    values[grid.index(test.grid.start) :] = test.values
    return TimeSeries(train.household_id, grid, values)


def plan_folds(split: SplitResult, horizon: int, calibration_days: int) -> list[Fold]:
    """Origins advance from the split date by the horizon until the global
    test end; the last fold may be partial."""
    test_end = split.test_end()
    if test_end is None:
        raise NoTestData(f"dataset {split.dataset_id} has no test data")
    folds = []
    origin = split.spec.split_date
    while origin <= test_end:
        folds.append(Fold(origin=origin, horizon=horizon, calibration_days=calibration_days))
        origin = origin + horizon * HOUR
    return folds


def eligible_households(
    fold: Fold,
    timelines: dict[str, TimeSeries],
    input_size: int,
    horizon: int,
) -> list[str]:
    """Pickup rule: enough history before the origin for the input window,
    total length strictly greater than input size plus horizon, and at
    least one scoreable slot in the forecast window."""
    out = []
    for hid in sorted(timelines):
        tl = timelines[hid]
        history = hours_between(tl.grid.start, fold.origin)
        if history < input_size:
            continue
        if len(tl) <= input_size + horizon:
            continue
        if tl.grid.end < fold.origin:
            continue
        out.append(hid)
    return out


def build_task(timeline: TimeSeries, fold: Fold, input_size: int) -> ForecastTask:
    hi = timeline.grid.index(fold.origin - HOUR) + 1
    window = timeline.values[hi - input_size : hi]
    return ForecastTask(
        household_id=timeline.household_id,
        origin=fold.origin,
        horizon=fold.horizon,
        input_values=tuple(float(v) for v in window),
    )


def calibration_window(timeline: TimeSeries, fold: Fold) -> tuple[list[float], bool]:
    """Values in [origin - calibration window, origin); flags short history."""
    lo_ts = max(fold.train_start, timeline.grid.start)
    lo = timeline.grid.index(lo_ts)
    hi = timeline.grid.index(fold.origin - HOUR) + 1
    short = timeline.grid.start > fold.train_start
    return [float(v) for v in timeline.values[lo:hi]], short


def run_backtest(
    splits: dict[str, SplitResult],
    test_actuals: dict[str, dict[str, TimeSeries]],
    forecasters: list,
    config: BacktestConfig,
    workers: int = 1,
) -> list[EvaluationRecord]:
    """Evaluate every forecaster over every (dataset, input size, horizon,
    fold, eligible household); actuals come from the raw, untouched test
    series. Output order is canonical regardless of worker count."""
    records: list[EvaluationRecord] = []
    failures = 0
    attempts = 0

    for forecaster in forecasters:
        desc = forecaster.descriptor
        trainable = desc.kind == "Trainable"
        for dataset_id in sorted(splits):
            split = splits[dataset_id]
            timelines = {
                hid: tl
                for hid, hs in split.households.items()
                if (tl := merge_timeline(hs.train, hs.test)) is not None
            }
            raw_test = test_actuals[dataset_id]
            for input_size in config.input_sizes:
                for horizon in config.horizons:
                    folds = plan_folds(split, horizon, config.calibration_days)
                    for fold in folds:
                        hids = eligible_households(fold, timelines, input_size, horizon)
                        # the fold's combined calibration payload rides on the
                        # first request of the fold; the adapter holds the
                        # trained state for the remaining households
                        contexts = {}
                        if trainable and hids:
                            contexts[hids[0]] = [
                                calibration_window(timelines[h], fold)[0] for h in hids
                            ]

                        def evaluate(hid, fold=fold, input_size=input_size, contexts=contexts):
                            tl = timelines[hid]
                            task = build_task(tl, fold, input_size)
                            forecast = forecaster.forecast(
                                task.input_values, fold.horizon,
                                retrain_context=contexts.get(hid),
                            )
                            return _make_record(
                                dataset_id, desc.model_id, task, fold, input_size,
                                raw_test.get(hid), forecast,
                                short_history=tl.grid.start > fold.train_start,
                            )

                        parallel = (
                            workers > 1 and not trainable and desc.transport == "InProcess"
                        )
                        if parallel:
                            with ThreadPoolExecutor(max_workers=workers) as pool:
                                results = list(pool.map(_guard(evaluate), hids))
                        else:
                            results = [_guard(evaluate)(h) for h in hids]
                        for hid, result in zip(hids, results):
                            attempts += 1
                            if isinstance(result, Exception):
                                failures += 1
                                log.warning(
                                    "skipping (%s, %s, %s): %s",
                                    desc.model_id, hid, format_timestamp(fold.origin), result,
                                )
                                if failures / attempts > config.max_failure_rate:
                                    raise RunAborted(
                                        f"{failures}/{attempts} forecasts failed, above "
                                        f"max_failure_rate={config.max_failure_rate}"
                                    )
                            elif result is not None:
                                records.append(result)

    records.sort(key=_record_key)
    return records


def _guard(fn):
    def wrapped(hid):
        try:
            return fn(hid)
        except Exception as exc:  # recorded against the failure budget
            return exc

    return wrapped


def _make_record(
    dataset_id, model_id, task, fold, input_size, test_series, forecast, short_history
) -> EvaluationRecord | None:
    pairs = []
    for step in range(fold.horizon):
        ts = fold.origin + step * HOUR
        if test_series is None or ts not in test_series.grid:
            continue
        actual = float(test_series.values[test_series.grid.index(ts)])
        pairs.append((step, actual, float(forecast[step])))
    if not pairs:
        return None
    return EvaluationRecord(
        dataset_id=dataset_id,
        model_id=model_id,
        household_id=task.household_id,
        origin=fold.origin,
        input_size=input_size,
        horizon=fold.horizon,
        pairs=tuple(pairs),
        short_history=short_history,
    )


def _record_key(r: EvaluationRecord):
    return (r.dataset_id, r.model_id, r.input_size, r.horizon, r.household_id, r.origin)


RECORDS_HEADER = [
    "dataset_id", "model_id", "household_id", "origin",
    "input_size", "horizon", "step", "actual", "predicted",
]


def write_records_csv(records: list[EvaluationRecord], sink) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(RECORDS_HEADER)
    for r in sorted(records, key=_record_key):
        for step, actual, predicted in r.pairs:
            writer.writerow([
                r.dataset_id, r.model_id, r.household_id, format_timestamp(r.origin),
                r.input_size, r.horizon, step,
                "" if np.isnan(actual) else repr(actual), repr(predicted),
            ])


def read_records_csv(source) -> list[EvaluationRecord]:
    reader = csv.reader(source)
    header = next(reader)
    if header != RECORDS_HEADER:
        raise ValueError(f"bad records header {header!r}")
    grouped: dict[tuple, list] = {}
    for row in reader:
        ds, model, hid, origin, input_size, horizon, step, actual, predicted = row
        key = (ds, model, hid, origin, int(input_size), int(horizon))
        grouped.setdefault(key, []).append(
            (int(step), float(actual) if actual else MISSING, float(predicted))
        )
    records = []
    for (ds, model, hid, origin, input_size, horizon), pairs in grouped.items():
        records.append(
            EvaluationRecord(
                dataset_id=ds, model_id=model, household_id=hid,
                origin=parse_timestamp(origin), input_size=input_size,
                horizon=horizon, pairs=tuple(sorted(pairs)),
            )
        )
    records.sort(key=_record_key)
    return records
