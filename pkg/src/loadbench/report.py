"""Result tables, baseline-relative heatmap cells and exploratory data
statistics (hourly/monthly median profiles, autocorrelation)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import TimeSeries
from .errors import DegenerateSeries, EmptyInput
from .ingest import Dataset
from .metrics import MetricResult

DEFAULT_MAX_LAG = 168


@dataclass(frozen=True)
class RelativeDiffCell:
    model_id: str
    input_size: int
    horizon: int
    percent_diff: float


@dataclass(frozen=True)
class AcfResult:
    household_id: str
    coefficients: tuple[float, ...]  # index = lag, starting at 0


def relative_diff(model_value: float, baseline_value: float) -> float:
    """Signed percentage vs the baseline; negative means improvement."""
    if baseline_value == 0:
        raise ZeroDivisionError("baseline metric is zero")
    return 100.0 * (model_value - baseline_value) / baseline_value


def heatmap_cells(
    results: list[MetricResult], baseline_id: str, dataset_id: str = "ALL"
) -> list[RelativeDiffCell]:
    """Per-cell comparison against the baseline at the matching input size
    and horizon."""
    rows = [m for m in results if m.dataset_id == dataset_id]
    baseline = {
        (m.input_size, m.horizon): m.mae_h for m in rows if m.model_id == baseline_id
    }
    cells = []
    for m in sorted(rows, key=lambda m: (m.model_id, m.input_size, m.horizon)):
        base = baseline.get((m.input_size, m.horizon))
        if base is None:
            continue
        cells.append(
            RelativeDiffCell(
                model_id=m.model_id,
                input_size=m.input_size,
                horizon=m.horizon,
                percent_diff=relative_diff(m.mae_h, base),
            )
        )
    return cells


def table6_rows(results: list[MetricResult]) -> list[dict]:
    """Model x dataset overview with MAE_h and MSE_h columns, models sorted
    ascending by mean MAE_h; ties break on model_id."""
    if not results:
        raise EmptyInput("no metric results")
    per_cell = [m for m in results if m.dataset_id != "ALL"]
    datasets = sorted({m.dataset_id for m in per_cell})
    # overview cell = unweighted mean over the (input, horizon) grid
    acc: dict[tuple[str, str], list[tuple[float, float]]] = {}
    for m in per_cell:
        acc.setdefault((m.model_id, m.dataset_id), []).append((m.mae_h, m.mse_h))
    rows = []
    for model_id in sorted({m.model_id for m in per_cell}):
        row = {"model_id": model_id}
        maes = []
        for ds in datasets:
            cell = acc.get((model_id, ds))
            if cell:
                mae = sum(c[0] for c in cell) / len(cell)
                mse = sum(c[1] for c in cell) / len(cell)
                row[f"{ds}_mae_h"], row[f"{ds}_mse_h"] = mae, mse
                maes.append(mae)
            else:
                row[f"{ds}_mae_h"] = row[f"{ds}_mse_h"] = float("nan")
        row["_sort"] = sum(maes) / len(maes) if maes else float("inf")
        rows.append(row)
    rows.sort(key=lambda r: (r.pop("_sort"), r["model_id"]))
    return rows


def table7_rows(results: list[MetricResult], dataset_id: str = "ALL") -> list[dict]:
    """Model x input-size rows with one MAE_h column per horizon, sorted
    ascending by the shortest-horizon MAE_h within each input-size block."""
    rows_in = [m for m in results if m.dataset_id == dataset_id]
    if not rows_in:
        raise EmptyInput(f"no metric results for dataset {dataset_id}")
    horizons = sorted({m.horizon for m in rows_in})
    cells = {(m.model_id, m.input_size, m.horizon): m.mae_h for m in rows_in}
    out = []
    for input_size in sorted({m.input_size for m in rows_in}):
        block = []
        for model_id in sorted({m.model_id for m in rows_in}):
            row = {"model_id": model_id, "input_size": input_size}
            for h in horizons:
                row[f"h{h}"] = cells.get((model_id, input_size, h), float("nan"))
            block.append(row)
        block.sort(key=lambda r: (r[f"h{horizons[0]}"], r["model_id"]))
        out.extend(block)
    return out


def format_table(rows: list[dict], float_fmt: str = "{:.4f}") -> str:
    """Aligned plain-text rendering of a list of uniform dicts."""
    if not rows:
        return ""
    cols = list(rows[0])
    cells = [[str(c) for c in cols]]
    for row in rows:
        rendered = []
        for c in cols:
            v = row[c]
            if isinstance(v, float):
                rendered.append("-" if math.isnan(v) else float_fmt.format(v))
            else:
                rendered.append(str(v))
        cells.append(rendered)
    widths = [max(len(r[i]) for r in cells) for i in range(len(cols))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
    return "\n".join(lines) + "\n"


def write_rows_csv(rows: list[dict], sink) -> None:
    if not rows:
        return
    cols = list(rows[0])
    sink.write(",".join(cols) + "\n")
    for row in rows:
        out = []
        for c in cols:
            v = row[c]
            if isinstance(v, float):
                out.append("" if math.isnan(v) else repr(v))
            else:
                out.append(str(v))
        sink.write(",".join(out) + "\n")


def write_heatmap_csv(cells: list[RelativeDiffCell], sink) -> None:
    sink.write("model_id,input_size,horizon,percent_diff\n")
    for c in cells:
        sink.write(f"{c.model_id},{c.input_size},{c.horizon},{c.percent_diff!r}\n")


def hourly_profile(dataset: Dataset) -> list[float]:
    """Median of present values per hour of day, pooled over households."""
    buckets = [[] for _ in range(24)]
    for ts in dataset.series.values():
        for stamp, value in zip(ts.grid, ts.values):
            if not math.isnan(value):
                buckets[stamp.hour].append(value)
    return [float(np.median(b)) if b else float("nan") for b in buckets]


def monthly_hourly_profile(dataset: Dataset) -> list[list[float]]:
    """12 x 24 matrix of medians grouped by calendar month and hour."""
    buckets = [[[] for _ in range(24)] for _ in range(12)]
    for ts in dataset.series.values():
        for stamp, value in zip(ts.grid, ts.values):
            if not math.isnan(value):
                buckets[stamp.month - 1][stamp.hour].append(value)
    return [
        [float(np.median(b)) if b else float("nan") for b in month] for month in buckets
    ]


def autocorrelation(series: TimeSeries, max_lag: int = DEFAULT_MAX_LAG) -> AcfResult:
    """Sample autocorrelation per lag; pairs containing a missing value are
    dropped, and each lag normalizes by the mean product over its valid
    pairs divided by the population variance of present values."""
    values = series.values
    present = ~np.isnan(values)
    if int(present.sum()) < max_lag + 2:
        raise DegenerateSeries(
            f"{series.household_id}: need at least {max_lag + 2} present values"
        )
    mean = float(values[present].mean())
    var = float(values[present].var())
    if var < 1e-18:
        raise DegenerateSeries(f"{series.household_id}: zero variance")
    centered = np.where(present, values - mean, 0.0)
    coeffs = [1.0]
    for lag in range(1, max_lag + 1):
        both = present[:-lag] & present[lag:]
        n = int(both.sum())
        if n == 0:
            coeffs.append(float("nan"))
            continue
        cov = float((centered[:-lag] * centered[lag:])[both].sum()) / n
        coeffs.append(cov / var)
    return AcfResult(household_id=series.household_id, coefficients=tuple(coeffs))


def write_profiles_csv(dataset: Dataset, sink) -> None:
    hourly = hourly_profile(dataset)
    monthly = monthly_hourly_profile(dataset)
    sink.write("scope,month,hour,median_kwh\n")
    for hour, v in enumerate(hourly):
        sink.write(f"hourly,,{hour},{'' if math.isnan(v) else repr(v)}\n")
    for month, row in enumerate(monthly, start=1):
        for hour, v in enumerate(row):
            sink.write(f"monthly,{month},{hour},{'' if math.isnan(v) else repr(v)}\n")


def write_acf_csv(acfs: list[AcfResult], sink) -> None:
    sink.write("household_id,lag,coefficient\n")
    for acf in sorted(acfs, key=lambda a: a.household_id):
        for lag, c in enumerate(acf.coefficients):
            sink.write(f"{acf.household_id},{lag},{'' if math.isnan(c) else repr(c)}\n")
