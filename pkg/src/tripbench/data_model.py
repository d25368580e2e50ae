"""Trip-record schema, CSV ingestion, feature encoding, and group partitioning."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

DAYS_OF_WEEK = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")
ROLES = ("train", "holdout", "synthetic")

FEATURES = ("origin", "destination", "start_min", "end_min", "day_of_week")
CATEGORICAL_FEATURES = ("origin", "destination", "day_of_week")
CONTINUOUS_FEATURES = ("start_min", "end_min")

CSV_HEADER = ["passenger_id", "origin", "destination", "start_min", "end_min", "day_of_week"]

OOV_LABEL = "__OOV__"


class SchemaError(ValueError):
    """Input columns or feature vocabularies do not match expectations."""


class ParseError(ValueError):
    """A CSV cell could not be parsed (message carries the row number)."""


class EmptyDatasetError(ValueError):
    """An operation received a dataset with no records."""


@dataclass(frozen=True)
class TripRecord:
    """One smart-card trip: OD pair, start/end minutes past midnight, weekday."""

    passenger_id: str
    origin: str
    destination: str
    start_min: int
    end_min: int
    day_of_week: str

    def __post_init__(self):
        if self.day_of_week not in DAYS_OF_WEEK:
            raise ValueError(f"day_of_week must be one of {DAYS_OF_WEEK}, got {self.day_of_week!r}")
        if not isinstance(self.start_min, int) or not isinstance(self.end_min, int):
            raise ValueError("start_min and end_min must be integers")

    def feature(self, name: str):
        if name not in FEATURES:
            raise ValueError(f"unknown feature {name!r}")
        return getattr(self, name)


@dataclass(frozen=True)
class TripDataset:
    """An ordered, immutable collection of trips with a role tag."""

    records: tuple[TripRecord, ...]
    role: str
    source_label: str = "real"

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {self.role!r}")
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self) -> int:
        return len(self.records)

    def require_nonempty(self) -> None:
        if not self.records:
            raise EmptyDatasetError(f"dataset {self.source_label!r} ({self.role}) has no records")

    def feature_values(self, name: str) -> list:
        return [r.feature(name) for r in self.records]

    def od_pairs(self) -> set[tuple[str, str]]:
        return {(r.origin, r.destination) for r in self.records}


@dataclass(frozen=True)
class EncodingSchema:
    """Train-anchored encoding: one-hot vocabularies and min-max ranges.

    Vocabulary order is first appearance in the train split. Continuous
    ranges are the train min/max; a degenerate range (min == max) encodes
    every value to the constant 0.5 so column counts stay aligned.
    """

    categorical_maps: Mapping[str, tuple[str, ...]]
    continuous_ranges: Mapping[str, tuple[float, float]]

    @property
    def features(self) -> tuple[str, ...]:
        return tuple(f for f in FEATURES
                     if f in self.categorical_maps or f in self.continuous_ranges)

    def column_names(self) -> list[str]:
        names = []
        for f in self.features:
            if f in self.categorical_maps:
                names.extend(f"{f}={v}" for v in self.categorical_maps[f])
            else:
                names.append(f)
        return names

    def n_columns(self) -> int:
        return len(self.column_names())

    def normalize(self, feature: str, value: float) -> float:
        lo, hi = self.continuous_ranges[feature]
        if hi == lo:
            return 0.5
        return (value - lo) / (hi - lo)

    def denormalize(self, feature: str, value: float) -> float:
        lo, hi = self.continuous_ranges[feature]
        if hi == lo:
            return lo
        return lo + value * (hi - lo)


@dataclass(frozen=True)
class EncodedMatrix:
    """Numeric design matrix (one-hot + min-max) with a reversible schema."""

    rows: np.ndarray
    schema: EncodingSchema
    feature_names: tuple[str, ...]
    passenger_ids: tuple[str, ...]
    oov_count: int = 0
    oov_by_feature: Mapping[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return self.rows.shape[0]


def load_csv(path, role: str) -> TripDataset:
    """Read a trip CSV (documented six-column layout) into a TripDataset."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDatasetError(f"{path}: file is empty") from None
        missing = [c for c in CSV_HEADER if c not in header]
        unknown = [c for c in header if c not in CSV_HEADER]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {missing}")
        if unknown:
            raise SchemaError(f"{path}: unknown column(s) {unknown}")
        idx = {c: header.index(c) for c in CSV_HEADER}

        records = []
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                start_min = int(row[idx["start_min"]])
                end_min = int(row[idx["end_min"]])
            except ValueError:
                raise ParseError(
                    f"{path}: row {row_no}: non-integer time field "
                    f"({row[idx['start_min']]!r}, {row[idx['end_min']]!r})"
                ) from None
            day = row[idx["day_of_week"]]
            if day not in DAYS_OF_WEEK:
                raise ParseError(f"{path}: row {row_no}: bad day_of_week {day!r}")
            records.append(TripRecord(
                passenger_id=row[idx["passenger_id"]],
                origin=row[idx["origin"]],
                destination=row[idx["destination"]],
                start_min=start_min,
                end_min=end_min,
                day_of_week=day,
            ))
    if not records:
        raise EmptyDatasetError(f"{path}: no data rows")
    return TripDataset(records=tuple(records), role=role, source_label=str(path))


def save_csv(ds: TripDataset, path) -> None:
    """Write a TripDataset in the standard six-column CSV layout."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in ds.records:
            writer.writerow([r.passenger_id, r.origin, r.destination,
                             r.start_min, r.end_min, r.day_of_week])


def fit_encoding(train: TripDataset, features: Iterable[str] = FEATURES) -> EncodingSchema:
    """Learn one-hot vocabularies and min-max ranges from the train split only."""
    train.require_nonempty()
    features = tuple(features)
    bad = [f for f in features if f not in FEATURES]
    if bad:
        raise SchemaError(f"unknown feature(s) {bad}; allowed: {FEATURES}")

    categorical_maps: dict[str, tuple[str, ...]] = {}
    continuous_ranges: dict[str, tuple[float, float]] = {}
    for f in features:
        values = train.feature_values(f)
        if f in CATEGORICAL_FEATURES:
            vocab = list(dict.fromkeys(values))  # first-appearance order
            if not vocab:
                raise SchemaError(f"feature {f!r} has no values in train data")
            categorical_maps[f] = tuple(vocab)
        else:
            continuous_ranges[f] = (float(min(values)), float(max(values)))
    return EncodingSchema(categorical_maps=categorical_maps,
                          continuous_ranges=continuous_ranges)


def encode(ds: TripDataset, schema: EncodingSchema) -> EncodedMatrix:
    """Encode records with a fitted schema.

    Out-of-vocabulary categories become an all-zero one-hot block (counted
    in the OOV tally); continuous values outside the train range are kept
    unclamped.
    """
    ds.require_nonempty()
    n = len(ds)
    d = schema.n_columns()
    rows = np.zeros((n, d))
    oov_by_feature = {f: 0 for f in schema.categorical_maps}

    offsets = {}
    col = 0
    for f in schema.features:
        offsets[f] = col
        col += len(schema.categorical_maps[f]) if f in schema.categorical_maps else 1
    value_index = {f: {v: i for i, v in enumerate(vocab)}
                   for f, vocab in schema.categorical_maps.items()}

    for i, rec in enumerate(ds.records):
        for f in schema.features:
            v = rec.feature(f)
            if f in schema.categorical_maps:
                j = value_index[f].get(v)
                if j is None:
                    oov_by_feature[f] += 1
                else:
                    rows[i, offsets[f] + j] = 1.0
            else:
                rows[i, offsets[f]] = schema.normalize(f, v)

    return EncodedMatrix(
        rows=rows,
        schema=schema,
        feature_names=tuple(schema.column_names()),
        passenger_ids=tuple(r.passenger_id for r in ds.records),
        oov_count=sum(oov_by_feature.values()),
        oov_by_feature=oov_by_feature,
    )


def decode(mat: EncodedMatrix, role: str = "synthetic", source_label: str = "decoded") -> TripDataset:
    """Invert `encode` for in-vocabulary rows (one-hot argmax, inverse min-max)."""
    schema = mat.schema
    records = []
    col = 0
    spans = []
    for f in schema.features:
        width = len(schema.categorical_maps[f]) if f in schema.categorical_maps else 1
        spans.append((f, col, width))
        col += width
    for i in range(len(mat)):
        fields = {"passenger_id": mat.passenger_ids[i]}
        for f, start, width in spans:
            block = mat.rows[i, start:start + width]
            if f in schema.categorical_maps:
                if block.sum() == 0:
                    raise SchemaError(f"row {i}: feature {f!r} has an all-zero (OOV) block")
                fields[f] = schema.categorical_maps[f][int(np.argmax(block))]
            else:
                fields[f] = int(round(schema.denormalize(f, float(block[0]))))
        records.append(TripRecord(**fields))
    return TripDataset(records=tuple(records), role=role, source_label=source_label)


def partition_by_group(ds: TripDataset, group_feature: str) -> dict[str, TripDataset]:
    """Split a dataset into disjoint per-group datasets (exhaustive partition)."""
    if group_feature not in CATEGORICAL_FEATURES:
        raise SchemaError(f"group feature must be categorical, got {group_feature!r}")
    groups: dict[str, list[TripRecord]] = {}
    for rec in ds.records:
        groups.setdefault(rec.feature(group_feature), []).append(rec)
    return {
        value: TripDataset(records=tuple(recs), role=ds.role,
                           source_label=f"{ds.source_label}[{group_feature}={value}]")
        for value, recs in groups.items()
    }
