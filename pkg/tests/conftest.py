from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from loadbench.core import MISSING, TimeGrid, TimeSeries
from loadbench.ingest import Dataset

T0 = datetime(2020, 1, 1, tzinfo=timezone.utc)


def at(hours: int) -> datetime:
    return T0 + timedelta(hours=hours)


def make_series(values, household_id="h1", start=T0) -> TimeSeries:
    values = np.asarray(values, dtype=float)
    grid = TimeGrid(start, start + timedelta(hours=len(values) - 1))
    return TimeSeries(household_id, grid, values)


def make_dataset(series_list, dataset_id="toy") -> Dataset:
    return Dataset(dataset_id, {s.household_id: s for s in series_list})


@pytest.fixture
def t0():
    return T0
