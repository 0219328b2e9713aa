import io
from datetime import timedelta, timezone

import numpy as np
import pytest

from loadbench.errors import DuplicateReading, EmptyInput, ParseError
from loadbench.ingest import (
    generate_synthetic,
    parse_canonical_csv,
    resample_hourly,
    serialize_canonical_csv,
    summarize,
)
from loadbench.report import autocorrelation

from conftest import T0, at, make_dataset, make_series

HEADER = "dataset_id,household_id,timestamp,kwh\n"


class TestParseCanonicalCsv:
    def test_single_row(self):
        ds = parse_canonical_csv(HEADER + "d,h1,2020-01-01T00:00:00Z,1.5\n")
        assert ds.dataset_id == "d"
        assert list(ds.series["h1"].values) == [1.5]

    def test_densification(self):
        text = HEADER + "d,h1,2020-01-01T00:00:00Z,1.0\nd,h1,2020-01-01T03:00:00Z,2.0\n"
        series = parse_canonical_csv(text).series["h1"]
        assert len(series) == 4
        assert series.values[0] == 1.0
        assert np.isnan(series.values[1]) and np.isnan(series.values[2])
        assert series.values[3] == 2.0

    def test_duplicate_reading(self):
        text = HEADER + "d,h1,2020-01-01T00:00:00Z,1\nd,h1,2020-01-01T00:00:00Z,2\n"
        with pytest.raises(DuplicateReading):
            parse_canonical_csv(text)

    def test_empty_kwh_is_missing(self):
        text = HEADER + "d,h1,2020-01-01T00:00:00Z,\nd,h1,2020-01-01T01:00:00Z,2\n"
        series = parse_canonical_csv(text).series["h1"]
        assert np.isnan(series.values[0])

    def test_negative_kwh(self):
        with pytest.raises(ValueError):
            parse_canonical_csv(HEADER + "d,h1,2020-01-01T00:00:00Z,-1\n")

    def test_malformed_row_names_line(self):
        with pytest.raises(ParseError, match="line 3"):
            parse_canonical_csv(HEADER + "d,h1,2020-01-01T00:00:00Z,1\nd,h1,nonsense,1\n")

    def test_bad_header(self):
        with pytest.raises(ParseError):
            parse_canonical_csv("a,b,c\n")

    def test_round_trip(self):
        ds = generate_synthetic(3, 10, seed=4, dataset_id="rt")
        buf = io.StringIO()
        serialize_canonical_csv(ds, buf)
        back = parse_canonical_csv(buf.getvalue())
        assert back.dataset_id == ds.dataset_id
        assert set(back.series) == set(ds.series)
        for hid in ds.series:
            assert back.series[hid] == ds.series[hid]


class TestResampleHourly:
    def test_sums_within_hour(self):
        out = resample_hourly([
            (T0 + timedelta(minutes=15), 0.2),
            (T0 + timedelta(minutes=45), 0.3),
        ])
        assert out == [(T0, 0.5)]

    def test_separate_hours(self):
        out = resample_hourly([
            (T0 + timedelta(minutes=15), 0.2),
            (T0 + timedelta(hours=1, minutes=10), 0.1),
        ])
        assert out == [(T0, 0.2), (at(1), 0.1)]

    def test_empty(self):
        assert resample_hourly([]) == []


class TestGenerateSynthetic:
    def test_deterministic(self):
        a = generate_synthetic(1, 2, seed=7)
        b = generate_synthetic(1, 2, seed=7)
        assert set(a.series) == set(b.series)
        for hid in a.series:
            assert a.series[hid] == b.series[hid]

    def test_non_negative(self):
        ds = generate_synthetic(4, 20, seed=3)
        for s in ds.series.values():
            assert s.present_values().min() >= 0

    def test_daily_autocorrelation(self):
        ds = generate_synthetic(3, 30, seed=1)
        for s in ds.series.values():
            acf = autocorrelation(s, max_lag=24)
            assert acf.coefficients[24] > 0.5

    def test_validation(self):
        with pytest.raises(ValueError):
            generate_synthetic(0, 10, seed=1)
        with pytest.raises(ValueError):
            generate_synthetic(1, 1, seed=1)


class TestSummarize:
    def test_single_constant_series(self):
        ds = make_dataset([make_series([1.0, 1.0, 1.0])])
        s = summarize(ds)
        assert (s.mean, s.median, s.std, s.n_households) == (1.0, 1.0, 0.0, 1)

    def test_two_series_pooled(self):
        ds = make_dataset([
            make_series([0.0], household_id="a"),
            make_series([2.0], household_id="b"),
        ])
        s = summarize(ds)
        assert (s.mean, s.median, s.std) == (1.0, 1.0, 1.0)

    def test_empty_dataset(self):
        with pytest.raises(EmptyInput):
            summarize(make_dataset([]))

    def test_mean_within_range(self):
        ds = generate_synthetic(5, 15, seed=9)
        s = summarize(ds)
        pooled = np.concatenate([x.present_values() for x in ds.series.values()])
        assert pooled.min() <= s.mean <= pooled.max()
