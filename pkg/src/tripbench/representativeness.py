"""Record validity checks and raw group/population divergence inputs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .data_model import EncodingSchema, TripDataset, TripRecord
from .metrics import (
    DEFAULT_MIN_GROUP_RECORDS,
    DEFAULT_N_BINS,
    DivergenceReport,
    divergence_profile,
    group_divergence_profile,
)

RULE_UNKNOWN_OD = "unknown_od_pair"
RULE_TIME_ORDER = "time_order"
RULE_TIME_RANGE = "time_range"
ALL_RULES = (RULE_UNKNOWN_OD, RULE_TIME_ORDER, RULE_TIME_RANGE)

TIME_RANGE = (0, 1440)  # minutes past midnight


@dataclass(frozen=True)
class ValidityReport:
    """Counts of logically inconsistent synthetic records and the validity score."""

    total: int
    failures: int
    failure_breakdown: Mapping[str, int]
    score_r: float
    example_failures: Mapping[str, tuple] = None

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "failures": self.failures,
            "failure_breakdown": dict(self.failure_breakdown),
            "score": self.score_r,
        }


def check_record_validity(rec: TripRecord, known_od: set[tuple[str, str]]) -> set[str]:
    """Return the subset of validity rules the record violates.

    Rules: the OD pair must exist in the real data, the start time must
    strictly precede the end time, and both times must lie in 0-1440.
    """
    failed = set()
    if (rec.origin, rec.destination) not in known_od:
        failed.add(RULE_UNKNOWN_OD)
    if not rec.start_min < rec.end_min:
        failed.add(RULE_TIME_ORDER)
    lo, hi = TIME_RANGE
    if not (lo <= rec.start_min <= hi and lo <= rec.end_min <= hi):
        failed.add(RULE_TIME_RANGE)
    return failed


def known_od_pairs(*real_datasets: TripDataset) -> set[tuple[str, str]]:
    """OD pairs observed anywhere in the real data (train and holdout)."""
    pairs = set()
    for ds in real_datasets:
        pairs |= ds.od_pairs()
    return pairs


def record_level_score(syn: TripDataset, known_od: set[tuple[str, str]],
                       max_examples: int = 3) -> ValidityReport:
    """Share of logically consistent records: 1 - failures/total.

    A record failing multiple rules counts once toward `failures` but once
    per rule in the breakdown.
    """
    syn.require_nonempty()
    breakdown = {rule: 0 for rule in ALL_RULES}
    examples = {rule: [] for rule in ALL_RULES}
    failures = 0
    for rec in syn.records:
        failed = check_record_validity(rec, known_od)
        if failed:
            failures += 1
            for rule in failed:
                breakdown[rule] += 1
                if len(examples[rule]) < max_examples:
                    examples[rule].append(rec)
    return ValidityReport(
        total=len(syn),
        failures=failures,
        failure_breakdown=breakdown,
        score_r=1.0 - failures / len(syn),
        example_failures={r: tuple(v) for r, v in examples.items()},
    )


def population_raw(real_test: TripDataset, syn: TripDataset,
                   features, schema: EncodingSchema,
                   n_bins: int = DEFAULT_N_BINS) -> DivergenceReport:
    """Raw population-level divergences against the held-out real test split."""
    return divergence_profile(real_test, syn, features, schema, n_bins=n_bins)


def group_raw(real_test: TripDataset, syn: TripDataset,
              features, schema: EncodingSchema,
              group_feature: str = "day_of_week",
              n_bins: int = DEFAULT_N_BINS,
              min_group_records: int = DEFAULT_MIN_GROUP_RECORDS) -> DivergenceReport:
    """Raw group-conditioned divergences against the held-out real test split."""
    return group_divergence_profile(real_test, syn, features, group_feature, schema,
                                    n_bins=n_bins, min_group_records=min_group_records)
