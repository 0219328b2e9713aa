"""Core value types: hour-aligned UTC timestamps, hourly grids, household
series and z-scaling statistics.

Missing readings are represented as NaN inside float arrays; ``MISSING`` is
the canonical marker and :func:`is_missing` the test for it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import Iterator, Sequence

import numpy as np

from .errors import AlignmentError, EmptyInput, InvalidRange

HOUR = timedelta(hours=1)
MISSING = float("nan")


def is_missing(value: float) -> bool:
    return isinstance(value, float) and math.isnan(value)


def ensure_hour_aligned(ts: datetime) -> datetime:
    """Normalize to UTC and reject anything finer than whole hours."""
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    else:
        ts = ts.astimezone(timezone.utc)
    if ts.minute or ts.second or ts.microsecond:
        raise AlignmentError(f"timestamp {ts.isoformat()} is not hour-aligned")
    return ts


def hours_between(start: datetime, end: datetime) -> int:
    """Whole-hour difference end - start; both must be hour-aligned."""
    return round((end - start) / HOUR)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:00:00Z")


def parse_timestamp(text: str) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    return ensure_hour_aligned(ts)


@dataclass(frozen=True)
class TimeGrid:
    """Contiguous hourly grid from start to end, both inclusive."""

    start: datetime
    end: datetime

    def __post_init__(self):
        object.__setattr__(self, "start", ensure_hour_aligned(self.start))
        object.__setattr__(self, "end", ensure_hour_aligned(self.end))
        if self.start > self.end:
            raise InvalidRange(
                f"grid start {self.start.isoformat()} after end {self.end.isoformat()}"
            )

    def __len__(self) -> int:
        return hours_between(self.start, self.end) + 1

    def __iter__(self) -> Iterator[datetime]:
        for i in range(len(self)):
            yield self.start + i * HOUR

    def __getitem__(self, i: int) -> datetime:
        n = len(self)
        if i < 0:
            i += n
        if not 0 <= i < n:
            raise IndexError(i)
        return self.start + i * HOUR

    def index(self, ts: datetime) -> int:
        ts = ensure_hour_aligned(ts)
        i = hours_between(self.start, ts)
        if not 0 <= i < len(self):
            raise IndexError(f"{ts.isoformat()} outside grid")
        return i

    def __contains__(self, ts: datetime) -> bool:
        try:
            self.index(ts)
        except (IndexError, AlignmentError):
            return False
        return True


def make_hourly_grid(start: datetime, end: datetime) -> TimeGrid:
    return TimeGrid(start, end)


class TimeSeries:
    """One household's hourly kWh sequence on a contiguous grid.

    ``values`` is a read-only float array, NaN marking missing slots.
    Present values must be non-negative (consumption is net import).
    """

    __slots__ = ("household_id", "grid", "values")

    def __init__(self, household_id: str, grid: TimeGrid, values: Sequence[float]):
        arr = np.asarray(values, dtype=float).copy()
        if arr.ndim != 1 or len(arr) != len(grid):
            raise InvalidRange(
                f"{household_id}: {len(arr)} values for a grid of length {len(grid)}"
            )
        present = arr[~np.isnan(arr)]
        if len(present) and present.min() < 0:
            raise ValueError(f"{household_id}: negative kWh reading")
        arr.setflags(write=False)
        self.household_id = household_id
        self.grid = grid
        self.values = arr

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TimeSeries)
            and self.household_id == other.household_id
            and self.grid == other.grid
            and np.array_equal(self.values, other.values, equal_nan=True)
        )

    def __repr__(self) -> str:
        return (
            f"TimeSeries({self.household_id!r}, "
            f"{format_timestamp(self.grid.start)}..{format_timestamp(self.grid.end)}, "
            f"n={len(self)}, present={self.n_present})"
        )

    @property
    def n_present(self) -> int:
        return int((~np.isnan(self.values)).sum())

    def present_values(self) -> np.ndarray:
        return self.values[~np.isnan(self.values)]

    def with_values(self, values: Sequence[float]) -> "TimeSeries":
        return TimeSeries(self.household_id, self.grid, values)

    def slice_index(self, lo: int, hi: int) -> "TimeSeries":
        """Sub-series over grid positions [lo, hi)."""
        if not (0 <= lo <= hi <= len(self)) or lo == hi:
            raise InvalidRange(f"bad slice [{lo}, {hi}) of length-{len(self)} series")
        grid = TimeGrid(self.grid[lo], self.grid[hi - 1])
        return TimeSeries(self.household_id, grid, self.values[lo:hi])

    def slice_before(self, ts: datetime) -> "TimeSeries | None":
        """Slots strictly before ts, or None when empty."""
        n = hours_between(self.grid.start, ts)
        n = min(n, len(self))
        if n <= 0:
            return None
        return self.slice_index(0, n)

    def slice_from(self, ts: datetime) -> "TimeSeries | None":
        """Slots at or after ts, or None when empty."""
        lo = hours_between(self.grid.start, ts)
        lo = max(lo, 0)
        if lo >= len(self):
            return None
        return self.slice_index(lo, len(self))


@dataclass(frozen=True)
class ScaleStats:
    """Per-household z-scaling parameters, computed on training data only."""

    mean: float
    std: float
    source: str = "TrainOnly"

    def __post_init__(self):
        if self.std <= 0:
            raise InvalidRange(f"std must be positive, got {self.std}")


DEGENERATE_STD = 1e-9


def compute_stats(values: Sequence[float]) -> ScaleStats:
    """Mean and population std over present values; near-zero std becomes 1."""
    arr = np.asarray(values, dtype=float)
    present = arr[~np.isnan(arr)]
    if len(present) == 0:
        raise EmptyInput("no present values to compute scaling statistics")
    mean = float(present.mean())
    std = float(present.std())  # population (ddof=0)
    if std < DEGENERATE_STD:
        std = 1.0
    return ScaleStats(mean=mean, std=std)


def zscore(values: Sequence[float], stats: ScaleStats) -> np.ndarray:
    """(v - mean) / std elementwise; NaN propagates unchanged."""
    arr = np.asarray(values, dtype=float)
    return (arr - stats.mean) / stats.std


def inverse_zscore(values: Sequence[float], stats: ScaleStats) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    return arr * stats.std + stats.mean
