"""Household-averaged error metrics: per-household z-scaling, MAE_h and
MSE_h. Each household's pairs reduce to one mean first; the group score is
the unweighted mean over households, so series length carries no weight.

MAPE/SMAPE are deliberately not offered: near-zero consumption values make
them explode.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .backtest import EvaluationRecord
from .core import ScaleStats
from .errors import EmptyInput, MissingStats

POOLED_DATASET_ID = "ALL"


@dataclass(frozen=True)
class HouseholdScore:
    household_id: str
    n_pairs: int
    mae: float
    mse: float


@dataclass(frozen=True)
class MetricResult:
    dataset_id: str
    model_id: str
    input_size: int
    horizon: int
    n_households: int
    mae_h: float
    mse_h: float


def scale_records(
    records: list[EvaluationRecord], stats_by_household: dict[str, ScaleStats]
) -> list[EvaluationRecord]:
    """z-score actuals and predictions with the same per-household train-only
    stats; missing actuals stay missing. Keys are plain household ids or
    (dataset_id, household_id) pairs when ids collide across datasets."""
    out = []
    for r in records:
        stats = stats_by_household.get((r.dataset_id, r.household_id))
        if stats is None:
            stats = stats_by_household.get(r.household_id)
        if stats is None:
            raise MissingStats(f"no scaling stats for {r.dataset_id}/{r.household_id}")
        pairs = tuple(
            (
                step,
                actual if math.isnan(actual) else (actual - stats.mean) / stats.std,
                (predicted - stats.mean) / stats.std,
            )
            for step, actual, predicted in r.pairs
        )
        out.append(replace(r, pairs=pairs))
    return out


def _group_key(r: EvaluationRecord):
    return (r.dataset_id, r.model_id, r.input_size, r.horizon)


def household_scores(records: list[EvaluationRecord]) -> list[HouseholdScore]:
    """Per-household reduction over all scoreable pairs; missing actuals are
    excluded from n rather than zero-filled."""
    by_household: dict[str, list[tuple[float, float]]] = {}
    for r in records:
        bucket = by_household.setdefault(r.household_id, [])
        for _, actual, predicted in r.pairs:
            if not math.isnan(actual):
                bucket.append((actual, predicted))
    scores = []
    for hid in sorted(by_household):
        pairs = by_household[hid]
        if not pairs:
            continue
        abs_errors = [abs(a - p) for a, p in pairs]
        sq_errors = [(a - p) ** 2 for a, p in pairs]
        scores.append(
            HouseholdScore(
                household_id=hid,
                n_pairs=len(pairs),
                mae=sum(abs_errors) / len(pairs),
                mse=sum(sq_errors) / len(pairs),
            )
        )
    return scores


def _metric_for_group(key, records: list[EvaluationRecord]) -> MetricResult:
    scores = household_scores(records)
    if not scores:
        raise EmptyInput(f"no scoreable pairs for group {key}")
    dataset_id, model_id, input_size, horizon = key
    return MetricResult(
        dataset_id=dataset_id,
        model_id=model_id,
        input_size=input_size,
        horizon=horizon,
        n_households=len(scores),
        mae_h=sum(s.mae for s in scores) / len(scores),
        mse_h=sum(s.mse for s in scores) / len(scores),
    )


def mae_h(records: list[EvaluationRecord]) -> float:
    """Unweighted household mean of per-household MAE over all records."""
    scores = household_scores(records)
    if not scores:
        raise EmptyInput("no scoreable pairs")
    return sum(s.mae for s in scores) / len(scores)


def mse_h(records: list[EvaluationRecord]) -> float:
    scores = household_scores(records)
    if not scores:
        raise EmptyInput("no scoreable pairs")
    return sum(s.mse for s in scores) / len(scores)


def aggregate(records: list[EvaluationRecord], pooled: bool = True) -> list[MetricResult]:
    """One MetricResult per (dataset, model, input size, horizon); with
    pooled=True, additional rows keyed dataset_id=ALL pool households of all
    datasets into one unweighted household mean."""
    groups: dict[tuple, list[EvaluationRecord]] = {}
    for r in records:
        groups.setdefault(_group_key(r), []).append(r)
    results = [_metric_for_group(key, group) for key, group in sorted(groups.items())]

    if pooled:
        pooled_groups: dict[tuple, list[EvaluationRecord]] = {}
        for r in records:
            # qualify household ids so equal ids in different datasets stay
            # separate households in the pooled mean
            qualified = replace(r, household_id=f"{r.dataset_id}/{r.household_id}")
            key = (POOLED_DATASET_ID, r.model_id, r.input_size, r.horizon)
            pooled_groups.setdefault(key, []).append(qualified)
        results.extend(
            _metric_for_group(key, group) for key, group in sorted(pooled_groups.items())
        )
    return results


METRICS_HEADER = "dataset_id,model_id,input_size,horizon,n_households,mae_h,mse_h"


def write_metrics_csv(results: list[MetricResult], sink) -> None:
    sink.write(METRICS_HEADER + "\n")
    for m in sorted(results, key=lambda m: (m.dataset_id, m.model_id, m.input_size, m.horizon)):
        sink.write(
            f"{m.dataset_id},{m.model_id},{m.input_size},{m.horizon},"
            f"{m.n_households},{m.mae_h!r},{m.mse_h!r}\n"
        )
