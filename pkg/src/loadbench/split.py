"""Leakage-safe train/test splitting: percentile-based per-dataset split
date, per-household materialization, cross-dataset overlap trimming and the
leakage audit."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timedelta

from .core import HOUR, TimeSeries, format_timestamp, hours_between
from .errors import DegenerateSplitWarning, EmptyInput
from .ingest import Dataset

DEFAULT_Q_MAX = 0.25
DEFAULT_Q_SPLIT = 0.8


@dataclass(frozen=True)
class SplitSpec:
    dataset_id: str
    q_max: float
    q_split: float
    t_min: datetime
    t_q: datetime
    split_date: datetime

    def __post_init__(self):
        if not self.t_min <= self.split_date <= self.t_q:
            raise ValueError(
                f"split_date {self.split_date} outside [{self.t_min}, {self.t_q}]"
            )


@dataclass
class HouseholdSplit:
    household_id: str
    train: TimeSeries | None
    test: TimeSeries | None


@dataclass
class SplitResult:
    dataset_id: str
    spec: SplitSpec
    households: dict[str, HouseholdSplit]
    trimmed_hours: int = 0

    def test_end(self) -> datetime | None:
        ends = [h.test.grid.end for h in self.households.values() if h.test is not None]
        return max(ends) if ends else None


def _nearest_rank(sorted_items, q: float):
    """1-based nearest-rank quantile: element ceil(q * N)."""
    n = len(sorted_items)
    k = max(1, min(n, math.ceil(q * n)))
    return sorted_items[k - 1]


def compute_split_date(
    dataset: Dataset, q_max: float = DEFAULT_Q_MAX, q_split: float = DEFAULT_Q_SPLIT
) -> SplitSpec:
    """Three-step split-date rule: quantile of household end dates, the
    hourly grid of all possible time points up to it, and a quantile of
    that grid."""
    if not dataset.series:
        raise EmptyInput(f"dataset {dataset.dataset_id} has no households")
    maxima = sorted(ts.grid.end for ts in dataset.series.values())
    t_min = min(ts.grid.start for ts in dataset.series.values())
    t_q = _nearest_rank(maxima, q_max)
    assert t_q >= t_min
    n_poss = hours_between(t_min, t_q) + 1
    k = max(1, min(n_poss, math.ceil(q_split * n_poss)))
    split_date = t_min + (k - 1) * HOUR
    return SplitSpec(
        dataset_id=dataset.dataset_id,
        q_max=q_max,
        q_split=q_split,
        t_min=t_min,
        t_q=t_q,
        split_date=split_date,
    )


def apply_split(dataset: Dataset, spec: SplitSpec) -> SplitResult:
    """Train = slots strictly before the split date, test = slots at/after.

    Households entirely on one side keep that side; mid-test entrants are
    retained for the backtest pickup rule.
    """
    households = {}
    for hid in dataset.household_ids:
        series = dataset.series[hid]
        households[hid] = HouseholdSplit(
            household_id=hid,
            train=series.slice_before(spec.split_date),
            test=series.slice_from(spec.split_date),
        )
    return SplitResult(dataset_id=dataset.dataset_id, spec=spec, households=households)


def trim_cross_dataset_overlap(splits: list[SplitResult]) -> list[SplitResult]:
    """For every ordered dataset pair (A, B): when A's test interval
    intersects B's training data, truncate B's training to end strictly
    before A's split date. Idempotent; only ever shortens training."""
    splits = sorted(splits, key=lambda s: s.dataset_id)
    for a in splits:
        a_test_end = a.test_end()
        if a_test_end is None:
            continue
        a_split = a.spec.split_date
        for b in splits:
            if b.dataset_id == a.dataset_id:
                continue
            trimmed = 0
            for hs in b.households.values():
                if hs.train is None or hs.train.grid.end < a_split:
                    continue
                if hs.train.grid.start > a_test_end:
                    continue
                before = len(hs.train)
                hs.train = hs.train.slice_before(a_split)
                after = len(hs.train) if hs.train is not None else 0
                trimmed += before - after
            if trimmed:
                b.trimmed_hours += trimmed
                if all(hs.train is None for hs in b.households.values()):
                    warnings.warn(
                        f"trimming against {a.dataset_id} emptied every training "
                        f"series of {b.dataset_id}",
                        DegenerateSplitWarning,
                    )
    return splits


@dataclass(frozen=True)
class AuditFinding:
    dataset_id: str
    household_id: str
    timestamp: datetime
    note: str = ""


@dataclass
class AuditReport:
    passed: bool
    findings: list[AuditFinding] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


def audit_leakage(splits: list[SplitResult], descriptors=None) -> AuditReport:
    """Verify no training data of any dataset reaches into the test interval
    of an overlapping dataset (or its own). Report-only; also notes
    foundation-model training-cutoff overlap when descriptors carry one."""
    findings = []
    for a in splits:
        a_test_end = a.test_end()
        if a_test_end is None:
            continue
        a_split = a.spec.split_date
        for b in splits:
            for hs in b.households.values():
                if hs.train is None:
                    continue
                if hs.train.grid.end >= a_split and hs.train.grid.start <= a_test_end:
                    offending = max(hs.train.grid.start, a_split)
                    findings.append(
                        AuditFinding(
                            dataset_id=b.dataset_id,
                            household_id=hs.household_id,
                            timestamp=offending,
                            note=f"training overlaps test of {a.dataset_id}",
                        )
                    )
    notes = []
    for desc in descriptors or []:
        cutoff = getattr(desc, "training_cutoff", None)
        if cutoff is None:
            if getattr(desc, "kind", None) == "ZeroShot":
                notes.append(f"{desc.model_id}: training cutoff undisclosed")
            continue
        for s in splits:
            if cutoff >= s.spec.split_date:
                notes.append(
                    f"{desc.model_id}: declared training cutoff "
                    f"{format_timestamp(cutoff)} overlaps the test period of "
                    f"{s.dataset_id} (split {format_timestamp(s.spec.split_date)})"
                )
    return AuditReport(passed=not findings, findings=findings, notes=notes)


def write_specs_csv(specs: list[SplitSpec], sink) -> None:
    sink.write("dataset_id,q_max,q_split,t_min,t_q,split_date\n")
    for s in sorted(specs, key=lambda s: s.dataset_id):
        sink.write(
            f"{s.dataset_id},{s.q_max},{s.q_split},{format_timestamp(s.t_min)},"
            f"{format_timestamp(s.t_q)},{format_timestamp(s.split_date)}\n"
        )


def write_audit_csv(report: AuditReport, sink) -> None:
    sink.write("status,dataset,household,timestamp\n")
    status = "PASS" if report.passed else "FAIL"
    if report.passed:
        sink.write(f"{status},,,\n")
    for f in report.findings:
        sink.write(
            f"{status},{f.dataset_id},{f.household_id},{format_timestamp(f.timestamp)}\n"
        )
