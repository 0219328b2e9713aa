"""Benchmark harness for short-term household electricity load forecasting:
preprocessing, leakage-safe splitting, rolling-origin backtesting, a
seasonal-average baseline, an external-forecaster adapter protocol, and
household-averaged error metrics with result tables and heatmap data."""

from .core import (
    MISSING,
    ScaleStats,
    TimeGrid,
    TimeSeries,
    compute_stats,
    make_hourly_grid,
    zscore,
)
from .ingest import Dataset, DatasetManifest, generate_synthetic, parse_canonical_csv
from .models import ForecasterDescriptor, SeasonalAverageForecaster, seasonal_average_forecast
from .metrics import MetricResult, mae_h, mse_h
from .report import relative_diff

__version__ = "0.1.0"

__all__ = [
    "MISSING",
    "ScaleStats",
    "TimeGrid",
    "TimeSeries",
    "Dataset",
    "DatasetManifest",
    "ForecasterDescriptor",
    "MetricResult",
    "SeasonalAverageForecaster",
    "compute_stats",
    "generate_synthetic",
    "make_hourly_grid",
    "mae_h",
    "mse_h",
    "parse_canonical_csv",
    "relative_diff",
    "seasonal_average_forecast",
    "zscore",
]
