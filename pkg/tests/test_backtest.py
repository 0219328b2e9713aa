import io

import numpy as np
import pytest

from loadbench.backtest import (
    BacktestConfig,
    EvaluationRecord,
    build_task,
    eligible_households,
    merge_timeline,
    plan_folds,
    read_records_csv,
    run_backtest,
    write_records_csv,
)
from loadbench.core import MISSING, hours_between
from loadbench.errors import NoTestData, RunAborted
from loadbench.models import ForecasterDescriptor, SeasonalAverageForecaster
from loadbench.split import apply_split, compute_split_date

from conftest import at, make_dataset, make_series

M = MISSING


def split_of(n_hours, q_split=0.8, household_id="h1"):
    ds = make_dataset([make_series(np.ones(n_hours), household_id=household_id)])
    spec = compute_split_date(ds, q_max=1.0, q_split=q_split)
    return apply_split(ds, spec)


def split_with_test_span(n_hours, test_hours, values=None, household_id="h1"):
    """Split of an n-hour series with exactly test_hours test slots."""
    if values is None:
        values = np.ones(n_hours)
    ds = make_dataset([make_series(values, household_id=household_id)])
    k = n_hours - test_hours + 1  # 1-based rank of the split date
    spec = compute_split_date(ds, q_max=1.0, q_split=k / n_hours)
    return apply_split(ds, spec)


class TestPlanFolds:
    def test_exact_multiple(self):
        split = split_with_test_span(240, 48)
        folds = plan_folds(split, horizon=24, calibration_days=365)
        assert len(folds) == 2
        assert folds[0].origin == split.spec.split_date
        assert hours_between(folds[0].origin, folds[1].origin) == 24

    def test_partial_tail(self):
        split = split_with_test_span(250, 50)
        folds = plan_folds(split, horizon=24, calibration_days=365)
        assert len(folds) == 3

    def test_horizon_longer_than_test(self):
        split = split_with_test_span(120, 24)
        folds = plan_folds(split, horizon=96, calibration_days=365)
        assert len(folds) == 1

    def test_no_test_data(self):
        ds = make_dataset([make_series(np.ones(100))])
        spec = compute_split_date(ds, q_max=1.0, q_split=0.8)
        split = apply_split(ds, spec)
        for hs in split.households.values():
            hs.test = None
        with pytest.raises(NoTestData):
            plan_folds(split, 24, 365)


class TestEligibleHouseholds:
    def _timelines(self, lengths, starts=None):
        starts = starts or {hid: 0 for hid in lengths}
        return {
            hid: make_series(np.ones(n), household_id=hid, start=at(starts[hid]))
            for hid, n in lengths.items()
        }

    def test_strict_length_boundary(self):
        from loadbench.backtest import Fold

        fold = Fold(origin=at(48), horizon=24)
        exactly = self._timelines({"x": 24 + 24})  # == input + horizon
        assert eligible_households(fold, exactly, 24, 24) == []
        one_more = self._timelines({"x": 24 + 24 + 1})
        assert eligible_households(fold, one_more, 24, 24) == ["x"]

    def test_pickup_rule_mid_test_entrant(self):
        from loadbench.backtest import Fold

        timelines = self._timelines({"late": 49}, starts={"late": 100})
        early = Fold(origin=at(100), horizon=24)
        later = Fold(origin=at(124), horizon=24)
        assert eligible_households(early, timelines, 24, 24) == []
        assert eligible_households(later, timelines, 24, 24) == ["late"]

    def test_too_short_history(self):
        from loadbench.backtest import Fold

        fold = Fold(origin=at(10), horizon=24)
        timelines = self._timelines({"x": 100})
        assert eligible_households(fold, timelines, 24, 24) == []


class TestMergeTimeline:
    def test_trimmed_hole_stays_missing(self):
        train = make_series(np.ones(10))
        test = make_series(np.ones(5) * 2, start=at(20))
        merged = merge_timeline(train, test)
        assert len(merged) == 25
        assert np.isnan(merged.values[10:20]).all()
        assert (merged.values[20:] == 2).all()


def run_simple_backtest(workers=1, horizons=(24,), input_sizes=(24,)):
    split = split_of(24 * 20, q_split=0.8)
    splits = {"toy": split}
    raw_tests = {
        "toy": {hid: hs.test for hid, hs in split.households.items() if hs.test}
    }
    config = BacktestConfig(
        input_sizes=input_sizes, horizons=horizons, calibration_days=365
    )
    return run_backtest(
        splits, raw_tests, [SeasonalAverageForecaster()], config, workers=workers
    )


class TestRunBacktest:
    def test_record_counts(self):
        split = split_with_test_span(240, 48)  # 2 folds
        splits = {"toy": split}
        raw = {"toy": {h: hs.test for h, hs in split.households.items() if hs.test}}
        config = BacktestConfig(input_sizes=(24,), horizons=(24,), calibration_days=365)
        records = run_backtest(splits, raw, [SeasonalAverageForecaster()], config)
        assert len(records) == 2
        assert all(len(r.pairs) == 24 for r in records)

    def test_missing_actual_retained(self):
        values = np.ones(240)
        values[200] = M  # inside the test span
        ds = make_dataset([make_series(values)])
        spec = compute_split_date(ds, q_max=1.0, q_split=0.8)
        split = apply_split(ds, spec)
        splits = {"toy": split}
        raw = {"toy": {h: hs.test for h, hs in split.households.items() if hs.test}}
        config = BacktestConfig(input_sizes=(24,), horizons=(24,), calibration_days=365)
        records = run_backtest(splits, raw, [SeasonalAverageForecaster()], config)
        missing_pairs = [
            p for r in records for p in r.pairs if np.isnan(p[1])
        ]
        assert len(missing_pairs) == 1

    def test_deterministic_across_workers(self):
        a = run_simple_backtest(workers=1)
        b = run_simple_backtest(workers=4)
        assert a == b

    def test_causality(self):
        split = split_of(24 * 30, q_split=0.8)
        folds = plan_folds(split, 24, 365)
        tl = merge_timeline(
            split.households["h1"].train, split.households["h1"].test
        )
        for fold in folds:
            task = build_task(tl, fold, 48)
            # last input slot is the hour just before the origin
            first_input_ts = fold.origin - 48 * (tl.grid[1] - tl.grid[0])
            assert tl.grid.index(fold.origin) - 48 == tl.grid.index(first_input_ts)

    def test_failure_rate_abort(self):
        class FailingForecaster:
            descriptor = ForecasterDescriptor(model_id="broken", kind="ZeroShot")

            def forecast(self, history, horizon, retrain_context=None):
                raise RuntimeError("boom")

            def close(self):
                pass

        split = split_of(240, q_split=0.8)
        splits = {"toy": split}
        raw = {"toy": {h: hs.test for h, hs in split.households.items() if hs.test}}
        config = BacktestConfig(
            input_sizes=(24,), horizons=(24,), calibration_days=365, max_failure_rate=0.01
        )
        with pytest.raises(RunAborted):
            run_backtest(splits, raw, [FailingForecaster()], config)

    def test_retrain_context_sent_once_per_fold(self):
        calls = []

        class SpyTrainable:
            descriptor = ForecasterDescriptor(
                model_id="tfs", kind="Trainable", transport="InProcess"
            )

            def forecast(self, history, horizon, retrain_context=None):
                calls.append(retrain_context is not None)
                return [1.0] * horizon

            def close(self):
                pass

        ds = make_dataset([
            make_series(np.ones(240), household_id="a"),
            make_series(np.ones(240), household_id="b"),
        ])
        spec = compute_split_date(ds, q_max=1.0, q_split=193 / 240)  # 48 h test
        split = apply_split(ds, spec)
        splits = {"toy": split}
        raw = {"toy": {h: hs.test for h, hs in split.households.items() if hs.test}}
        config = BacktestConfig(input_sizes=(24,), horizons=(24,), calibration_days=365)
        run_backtest(splits, raw, [SpyTrainable()], config)
        # 2 folds x 2 households; context only on the first request of a fold
        assert calls == [True, False, True, False]


class TestRecordsCsv:
    def test_round_trip(self):
        records = run_simple_backtest()
        buf = io.StringIO()
        write_records_csv(records, buf)
        buf.seek(0)
        back = read_records_csv(buf)
        assert [
            (r.dataset_id, r.model_id, r.household_id, r.origin, r.input_size, r.horizon)
            for r in back
        ] == [
            (r.dataset_id, r.model_id, r.household_id, r.origin, r.input_size, r.horizon)
            for r in records
        ]
        for a, b in zip(back, records):
            for (s1, a1, p1), (s2, a2, p2) in zip(a.pairs, b.pairs):
                assert s1 == s2 and p1 == p2
                assert (np.isnan(a1) and np.isnan(a2)) or a1 == a2
