"""Training-side gap handling: gap detection, longest-valid-segment
selection, linear interpolation of internal gaps and 24-hour-lag trailing
fill. Evaluation data is never routed through this module."""
from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime

import numpy as np

from .core import TimeSeries, format_timestamp
from .errors import ContractViolation, EmptyInput, InsufficientHistory

MAX_GAP_HOURS = 72  # three consecutive days, inclusive
SEASONAL_LAG = 24


@dataclass(frozen=True)
class Gap:
    start_index: int
    length_hours: int


@dataclass(frozen=True)
class PreprocessReport:
    household_id: str
    segment_start: datetime
    segment_end: datetime
    gaps_interpolated: int
    trailing_filled: int


def find_gaps(series: TimeSeries) -> list[Gap]:
    """Maximal runs of missing slots in grid order, including edges."""
    missing = np.isnan(series.values)
    gaps = []
    i = 0
    n = len(missing)
    while i < n:
        if missing[i]:
            j = i
            while j < n and missing[j]:
                j += 1
            gaps.append(Gap(start_index=i, length_hours=j - i))
            i = j
        else:
            i += 1
    return gaps


def select_longest_valid_segment(
    series: TimeSeries, max_gap_hours: int = MAX_GAP_HOURS
) -> TimeSeries:
    """Longest contiguous sub-series with no gap strictly longer than
    max_gap_hours; ties go to the latest segment. The result starts and
    ends on present values."""
    present = ~np.isnan(series.values)
    if not present.any():
        raise EmptyInput(f"{series.household_id}: all values missing")

    # Long gaps split the series into chunks; within a chunk trim edge gaps.
    long_gaps = [g for g in find_gaps(series) if g.length_hours > max_gap_hours]
    bounds = []
    lo = 0
    for g in long_gaps:
        if g.start_index > lo:
            bounds.append((lo, g.start_index))
        lo = g.start_index + g.length_hours
    if lo < len(series):
        bounds.append((lo, len(series)))

    best = None
    for lo, hi in bounds:
        idx = np.flatnonzero(present[lo:hi])
        if len(idx) == 0:
            continue
        a, b = lo + idx[0], lo + idx[-1] + 1
        # >= prefers the later segment on equal length
        if best is None or (b - a) >= (best[1] - best[0]):
            best = (a, b)
    return series.slice_index(*best)


def interpolate_internal(series: TimeSeries) -> TimeSeries:
    """Linearly bridge every internal missing run between present neighbours."""
    values = series.values
    if np.isnan(values[0]) or np.isnan(values[-1]):
        raise ContractViolation(
            f"{series.household_id}: series must start and end on present values"
        )
    present = ~np.isnan(values)
    idx = np.arange(len(values))
    filled = np.interp(idx, idx[present], values[present])
    return series.with_values(filled)


def fill_trailing(series: TimeSeries) -> TimeSeries:
    """Resolve a trailing missing run by copying values from 24 hours
    earlier; runs longer than 24 hours cascade onto already-filled slots."""
    values = series.values.copy()
    missing = np.isnan(values)
    if not missing.any() or not missing[-1]:
        return series
    first_trailing = len(values)
    while first_trailing > 0 and missing[first_trailing - 1]:
        first_trailing -= 1
    if len(values) <= SEASONAL_LAG or first_trailing < SEASONAL_LAG:
        raise InsufficientHistory(
            f"{series.household_id}: fewer than {SEASONAL_LAG + 1} slots of "
            "history before the trailing gap"
        )
    for i in range(first_trailing, len(values)):
        values[i] = values[i - SEASONAL_LAG]
    return series.with_values(values)


def preprocess_training_series(
    series: TimeSeries, max_gap_hours: int = MAX_GAP_HOURS
) -> tuple[TimeSeries, PreprocessReport]:
    """Full training chain: segment selection, interpolation, trailing fill.

    A missing run at the very end of the training series (at most
    max_gap_hours long, e.g. a household cut mid-gap by the split date) is
    kept and resolved by the 24-hour-lag fill rather than trimmed away.
    """
    segment = select_longest_valid_segment(series, max_gap_hours)
    n_internal = int(np.isnan(segment.values).sum())
    interpolated = interpolate_internal(segment)

    trailing = 0
    seg_end = series.grid.index(segment.grid.end)
    tail = len(series) - 1 - seg_end
    if (
        0 < tail <= max_gap_hours
        and len(interpolated) > SEASONAL_LAG
        and bool(np.isnan(series.values[seg_end + 1 :]).all())
    ):
        extended = series.slice_index(series.grid.index(segment.grid.start), len(series))
        values = extended.values.copy()
        values[: len(interpolated)] = interpolated.values
        filled = fill_trailing(extended.with_values(values))
        interpolated, trailing = filled, tail

    return interpolated, PreprocessReport(
        household_id=series.household_id,
        segment_start=interpolated.grid.start,
        segment_end=interpolated.grid.end,
        gaps_interpolated=n_internal,
        trailing_filled=trailing,
    )


def write_reports_csv(reports: list[PreprocessReport], sink) -> None:
    sink.write("household_id,segment_start,segment_end,interpolated,trailing_filled\n")
    for r in sorted(reports, key=lambda r: r.household_id):
        sink.write(
            f"{r.household_id},{format_timestamp(r.segment_start)},"
            f"{format_timestamp(r.segment_end)},{r.gaps_interpolated},{r.trailing_filled}\n"
        )
